// spangcn command-line front end: train / eval / analyze / gradcheck /
// synth / convert-tree.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spangcn/corpus.hpp"
#include "spangcn/error.hpp"
#include "spangcn/evalkit.hpp"
#include "spangcn/gradcheck.hpp"
#include "spangcn/model.hpp"
#include "spangcn/trainer.hpp"
#include "spangcn/treebank.hpp"

using json = nlohmann::ordered_json;
using namespace spangcn;

namespace {

// Everything a training run needs, resolved from the config file plus any
// command-line overrides. Unknown config keys are rejected.
struct RunConfig {
  std::string variant = "spangcn";
  std::string train_path;
  std::string dev_path;
  std::string embeddings;  // empty = deterministic hashed vectors
  std::string checkpoint;
  std::string log_path;  // empty = stdout
  TrainConfig train;
  EncoderConfig enc;
  bool softmax_before_crf = false;
};

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("config file '" + path + "': " + e.what());
  }
  static const std::set<std::string> known = {
      "variant",       "train",          "dev",
      "embeddings",    "checkpoint",     "log",
      "seed",          "lr",             "max_epochs",
      "plateau_patience", "grad_clip",   "hidden",
      "embed_dim",     "pred_dim",       "lower_layers",
      "top_layers",    "baseline_layers", "gcn_layers",
      "word_dropout",  "recurrent_dropout", "softmax_before_crf",
      "log_seconds"};
  for (const auto& [key, val] : j.items())
    if (!known.count(key))
      throw ValidationError("config file '" + path + "': unknown key '" +
                            key + "'");
  RunConfig rc;
  auto str = [&](const char* k, std::string& out, bool required) {
    if (j.contains(k) && !j[k].is_null()) out = j[k].get<std::string>();
    else if (required)
      throw ValidationError("config file '" + path + "': missing '" +
                            std::string(k) + "'");
  };
  str("variant", rc.variant, false);
  str("train", rc.train_path, true);
  str("dev", rc.dev_path, true);
  str("embeddings", rc.embeddings, false);
  str("checkpoint", rc.checkpoint, false);
  str("log", rc.log_path, false);
  if (j.contains("seed")) rc.train.seed = j["seed"].get<uint64_t>();
  if (j.contains("lr")) rc.train.lr = j["lr"].get<double>();
  if (j.contains("max_epochs")) rc.train.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("plateau_patience"))
    rc.train.plateau_patience = j["plateau_patience"].get<int>();
  if (j.contains("grad_clip")) rc.train.grad_clip = j["grad_clip"].get<double>();
  if (j.contains("log_seconds"))
    rc.train.log_seconds = j["log_seconds"].get<bool>();
  if (j.contains("hidden")) rc.enc.hidden = j["hidden"].get<int>();
  if (j.contains("embed_dim")) rc.enc.embed_dim = j["embed_dim"].get<int>();
  if (j.contains("pred_dim")) rc.enc.pred_dim = j["pred_dim"].get<int>();
  if (j.contains("lower_layers"))
    rc.enc.lower_layers = j["lower_layers"].get<int>();
  if (j.contains("top_layers")) rc.enc.top_layers = j["top_layers"].get<int>();
  if (j.contains("baseline_layers"))
    rc.enc.baseline_layers = j["baseline_layers"].get<int>();
  if (j.contains("gcn_layers")) rc.enc.gcn_layers = j["gcn_layers"].get<int>();
  if (j.contains("word_dropout"))
    rc.enc.word_dropout = j["word_dropout"].get<double>();
  if (j.contains("recurrent_dropout"))
    rc.enc.recurrent_dropout = j["recurrent_dropout"].get<double>();
  if (j.contains("softmax_before_crf"))
    rc.softmax_before_crf = j["softmax_before_crf"].get<bool>();
  if (rc.train.plateau_patience < 1)
    throw ValidationError("plateau_patience must be >= 1");
  if (rc.train.lr <= 0 || rc.train.grad_clip <= 0 || rc.train.max_epochs < 1)
    throw ValidationError("lr, grad_clip and max_epochs must be positive");
  variant_from_string(rc.variant);  // validate early
  return rc;
}

json run_config_to_json(const RunConfig& rc) {
  json j;
  j["variant"] = rc.variant;
  j["train"] = rc.train_path;
  j["dev"] = rc.dev_path;
  j["embeddings"] = rc.embeddings.empty() ? json(nullptr) : json(rc.embeddings);
  j["checkpoint"] = rc.checkpoint;
  j["log"] = rc.log_path;
  j["seed"] = rc.train.seed;
  j["lr"] = rc.train.lr;
  j["max_epochs"] = rc.train.max_epochs;
  j["plateau_patience"] = rc.train.plateau_patience;
  j["grad_clip"] = rc.train.grad_clip;
  j["hidden"] = rc.enc.hidden;
  j["embed_dim"] = rc.enc.embed_dim;
  j["pred_dim"] = rc.enc.pred_dim;
  j["lower_layers"] = rc.enc.lower_layers;
  j["top_layers"] = rc.enc.top_layers;
  j["baseline_layers"] = rc.enc.baseline_layers;
  j["gcn_layers"] = rc.enc.gcn_layers;
  j["word_dropout"] = rc.enc.word_dropout;
  j["recurrent_dropout"] = rc.enc.recurrent_dropout;
  j["softmax_before_crf"] = rc.softmax_before_crf;
  j["log_seconds"] = rc.train.log_seconds;
  return j;
}

// Label inventories come from the data itself.
ModelConfig build_model_config(const RunConfig& rc,
                               const std::vector<AnnotatedSentence>& train_set,
                               const std::vector<AnnotatedSentence>& dev_set) {
  ModelConfig mc;
  mc.variant = variant_from_string(rc.variant);
  mc.enc = rc.enc;
  mc.softmax_before_crf = rc.softmax_before_crf;
  std::set<std::string> roles = collect_roles(train_set);
  for (const std::string& r : collect_roles(dev_set)) roles.insert(r);
  mc.roles.assign(roles.begin(), roles.end());
  std::set<std::string> cons, deps;
  for (const auto* corpus : {&train_set, &dev_set}) {
    for (const AnnotatedSentence& s : *corpus) {
      if (!s.tree_text) continue;
      ConstituencyTree t = strip_preterminals(parse_ptb(*s.tree_text));
      for (const TreeNode& n : t.nodes) cons.insert(n.label);
      for (const std::string& l : to_dependency(t).labels) deps.insert(l);
    }
  }
  mc.cons_labels.assign(cons.begin(), cons.end());
  mc.dep_labels.assign(deps.begin(), deps.end());
  return mc;
}

EmbeddingTable load_embeddings(const std::string& path, int dim) {
  if (path.empty()) return EmbeddingTable::hashed(dim);
  return EmbeddingTable::load_glove(path);
}

int cmd_train(const std::string& config_path, const std::string& seed_override,
              const std::string& variant_override,
              const std::string& checkpoint_override) {
  RunConfig rc = load_run_config(config_path);
  if (!seed_override.empty()) rc.train.seed = std::stoull(seed_override);
  if (!variant_override.empty()) {
    variant_from_string(variant_override);
    rc.variant = variant_override;
  }
  if (!checkpoint_override.empty()) rc.checkpoint = checkpoint_override;

  std::vector<AnnotatedSentence> train_set = load_jsonl(rc.train_path);
  std::vector<AnnotatedSentence> dev_set = load_jsonl(rc.dev_path);
  if (train_set.empty()) throw ValidationError("empty training set");

  ModelConfig mc = build_model_config(rc, train_set, dev_set);
  SrlModel model(mc, load_embeddings(rc.embeddings, rc.enc.embed_dim));
  std::mt19937_64 init_rng(rc.train.seed);
  model.init_params(init_rng);

  std::ofstream log_file;
  std::ostream* log = &std::cout;
  if (!rc.log_path.empty()) {
    log_file.open(rc.log_path);
    if (!log_file)
      throw ValidationError("cannot open log file '" + rc.log_path + "'");
    log = &log_file;
  }
  json echo;
  echo["config"] = run_config_to_json(rc);
  *log << echo.dump() << "\n";

  std::vector<SrlExample> train_ex = model.make_examples(train_set);
  std::vector<SrlExample> dev_ex = model.make_examples(dev_set);
  TrainResult res =
      train(model, train_ex, dev_ex, rc.train, log, rc.checkpoint);
  std::cerr << "best dev F1 " << res.best_f1 << " at epoch " << res.best_epoch
            << "\n";
  return 0;
}

SrlModel load_model(const std::string& checkpoint_path,
                    const std::string& embeddings_path) {
  ModelParams params;
  std::string config_json;
  load_checkpoint(checkpoint_path, params, config_json);
  ModelConfig mc = ModelConfig::from_json(config_json);
  SrlModel model(mc, load_embeddings(embeddings_path, mc.enc.embed_dim));
  model.params() = std::move(params);
  return model;
}

json prf_json(const Prf& prf) {
  json j;
  j["precision"] = prf.precision();
  j["recall"] = prf.recall();
  j["f1"] = prf.f1();
  j["tp"] = prf.tp;
  j["fp"] = prf.fp;
  j["fn"] = prf.fn;
  return j;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& embeddings_path) {
  SrlModel model = load_model(checkpoint_path, embeddings_path);
  std::vector<AnnotatedSentence> data = load_jsonl(data_path);
  PredictionSet preds = evaluate(model, model.make_examples(data));
  std::cout << prf_json(span_prf(preds)).dump(2) << "\n";
  return 0;
}

void print_bucket_table(std::ostream& os, const std::string& title,
                        const std::vector<BucketRow>& rows) {
  os << title << "\n";
  os << std::left << std::setw(12) << "bucket" << std::right << std::setw(8)
     << "gold" << std::setw(10) << "P" << std::setw(10) << "R" << std::setw(10)
     << "F1" << "\n";
  for (const BucketRow& r : rows) {
    std::ostringstream range;
    if (r.hi == INT_MAX)
      range << r.lo << "+";
    else
      range << r.lo << "-" << (r.hi - 1);
    os << std::left << std::setw(12) << range.str() << std::right
       << std::setw(8) << r.gold_count << std::fixed << std::setprecision(4)
       << std::setw(10) << r.prf.precision() << std::setw(10) << r.prf.recall()
       << std::setw(10) << r.prf.f1() << "\n";
  }
}

void write_bucket_csv(const std::string& path,
                      const std::vector<BucketRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "'");
  out << "lo,hi,gold,precision,recall,f1\n";
  for (const BucketRow& r : rows)
    out << r.lo << "," << (r.hi == INT_MAX ? -1 : r.hi) << "," << r.gold_count
        << "," << r.prf.precision() << "," << r.prf.recall() << ","
        << r.prf.f1() << "\n";
}

int cmd_analyze(const std::string& checkpoint_path,
                const std::string& data_path,
                const std::string& embeddings_path,
                const std::vector<int>& buckets, const std::string& oracle,
                const std::string& plot_prefix) {
  SrlModel model = load_model(checkpoint_path, embeddings_path);
  std::vector<AnnotatedSentence> data = load_jsonl(data_path);
  PredictionSet preds = evaluate(model, model.make_examples(data));

  Prf overall = span_prf(preds);
  std::cout << "overall  P " << std::fixed << std::setprecision(4)
            << overall.precision() << "  R " << overall.recall() << "  F1 "
            << overall.f1() << "\n\n";

  auto by_len = bucket_report(preds, BucketBy::SentenceLength, buckets);
  auto by_dist = bucket_report(preds, BucketBy::PredArgDistance, buckets);
  print_bucket_table(std::cout, "F1 by sentence length", by_len);
  std::cout << "\n";
  print_bucket_table(std::cout, "F1 by predicate-argument distance", by_dist);

  std::ofstream oracle_csv;
  if (!plot_prefix.empty()) {
    write_bucket_csv(plot_prefix + "-length.csv", by_len);
    write_bucket_csv(plot_prefix + "-distance.csv", by_dist);
  }
  if (!oracle.empty()) {
    std::cout << "\noracle corrections (cumulative)\n";
    if (!plot_prefix.empty()) {
      oracle_csv.open(plot_prefix + "-oracle.csv");
      if (!oracle_csv)
        throw ValidationError("cannot open oracle csv for writing");
      oracle_csv << "fix,f1\n";
    }
    std::vector<OracleFixKind> seq;
    if (oracle == "all")
      seq = oracle_fix_sequence();
    else
      seq.push_back(oracle_fix_from_string(oracle));
    PredictionSet cur = preds;
    std::cout << std::left << std::setw(14) << "(none)" << std::fixed
              << std::setprecision(4) << span_prf(cur).f1() << "\n";
    for (OracleFixKind k : seq) {
      cur = oracle_fix(cur, k);
      double f1 = span_prf(cur).f1();
      std::cout << std::left << std::setw(14) << to_string(k) << std::fixed
                << std::setprecision(4) << f1 << "\n";
      if (oracle_csv) oracle_csv << to_string(k) << "," << f1 << "\n";
    }
  }
  return 0;
}

// Small fixed fixture: 4 tokens, 3 constituents after stripping.
int cmd_gradcheck(const std::string& variant_name, double eps, int samples) {
  Variant variant = variant_from_string(variant_name);
  ModelConfig mc;
  mc.variant = variant;
  mc.enc.embed_dim = 8;
  mc.enc.pred_dim = 4;
  mc.enc.hidden = 10;
  mc.enc.lower_layers = 2;
  mc.enc.top_layers = 1;
  mc.enc.baseline_layers = 2;
  mc.enc.gcn_layers = 1;
  mc.enc.word_dropout = 0.0;  // objective must be deterministic
  mc.enc.recurrent_dropout = 0.0;
  mc.roles = {"A0", "A1"};
  mc.cons_labels = {"NP", "S", "VP"};
  mc.dep_labels = {"NP", "S", "VP", "dep", "root"};

  AnnotatedSentence s;
  s.tokens = {"the", "cat", "sat", "down"};
  s.tree_text = "(S (NP (D the) (N cat)) (VP (V sat) (P down)))";
  PredicateAnnotation p;
  p.index = 2;
  p.spans = {{0, 2, "A0"}, {3, 4, "A1"}};
  s.predicates = {p};
  s.validate();

  SrlModel model(mc, EmbeddingTable::hashed(mc.enc.embed_dim));
  std::mt19937_64 rng(1234);
  model.init_params(rng);
  SrlExample ex = model.make_example(s, p);

  GradMap analytic;
  std::mt19937_64 dropout_rng(0);  // rates are zero; path is deterministic
  model.loss_and_grads(ex, analytic, dropout_rng);

  GradCheckResult res = finite_diff_check(
      [&](const ModelParams& at) { return model.loss_at(ex, at); },
      model.params(), analytic, eps, samples, rng);
  std::cout << "variant " << variant_name << ": max rel error "
            << std::scientific << res.max_rel_error << " over " << res.checked
            << " coordinates";
  if (!res.worst_param.empty())
    std::cout << " (worst: " << res.worst_param << "[" << res.worst_index
              << "])";
  std::cout << "\n";
  return res.max_rel_error > 1e-4 ? 2 : 0;
}

int cmd_synth(uint64_t seed, int size, const std::string& out) {
  if (size <= 0) throw ValidationError("--size must be positive");
  save_jsonl(out, gen_synthetic(seed, size));
  return 0;
}

int cmd_convert_tree(const std::string& in_path, const std::string& out_path,
                     const std::string& format) {
  if (format != "ptb" && format != "deps")
    throw ValidationError("--format must be ptb or deps");
  std::ifstream in(in_path);
  if (!in) throw ValidationError("cannot open '" + in_path + "'");
  std::ofstream out(out_path);
  if (!out) throw ValidationError("cannot open '" + out_path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line == "-" || line.empty()) {
      out << (format == "ptb" ? "-" : "null") << "\n";
      continue;
    }
    ConstituencyTree tree;
    try {
      tree = parse_ptb(line);
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (format == "ptb") {
      out << render_ptb(tree) << "\n";
    } else {
      DependencyTree dep = to_dependency(strip_preterminals(tree));
      json j;
      j["heads"] = dep.heads;
      j["labels"] = dep.labels;
      out << j.dump() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Span-graph SRL: training, evaluation and analysis"};
  app.require_subcommand(1);

  std::string config_path, seed_str, variant = "", checkpoint, data,
              embeddings, oracle, plot_prefix;
  std::string in_path, out_path, format = "ptb";
  double eps = 1e-5;
  int samples = 200, size = 0;
  uint64_t seed = 0;
  std::vector<int> buckets = {0, 10, 20, 30};

  auto* tr = app.add_subcommand("train", "Train a model from a JSON config");
  tr->add_option("--config", config_path, "Run config file")->required();
  tr->add_option("--seed", seed_str, "Override the config seed");
  tr->add_option("--variant", variant, "Override the model variant");
  tr->add_option("--checkpoint", checkpoint, "Override the checkpoint path");

  auto* ev = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", data, "JSONL dataset")->required();
  ev->add_option("--embeddings", embeddings,
                 "GloVe-style text file (default: hashed vectors)");

  auto* an = app.add_subcommand("analyze", "Bucketed F1 and oracle analyses");
  an->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  an->add_option("--data", data, "JSONL dataset")->required();
  an->add_option("--embeddings", embeddings,
                 "GloVe-style text file (default: hashed vectors)");
  an->add_option("--buckets", buckets, "Bucket lower bounds (increasing)");
  an->add_option("--oracle", oracle,
                 "Oracle correction: all or one of drop_arg, add_arg, "
                 "merge_spans, split_spans, fix_boundary, fix_labels");
  an->add_option("--plot-data", plot_prefix, "Write CSVs with this prefix");

  auto* gc = app.add_subcommand("gradcheck",
                                "Finite-difference check on a tiny fixture");
  gc->add_option("--variant", variant, "baseline|spangcn|depgcn")
      ->default_val("spangcn");
  gc->add_option("--eps", eps, "Central-difference step")->default_val(1e-5);
  gc->add_option("--samples", samples, "Sampled coordinates")
      ->default_val(200);

  auto* sy = app.add_subcommand("synth", "Generate a synthetic corpus");
  sy->add_option("--seed", seed, "RNG seed")->required();
  sy->add_option("--size", size, "Sentence count")->required();
  sy->add_option("--out", out_path, "Output JSONL path")->required();

  auto* cv = app.add_subcommand("convert-tree", "Normalize or convert trees");
  cv->add_option("--in", in_path, "Input tree file (one per line, - = none)")
      ->required();
  cv->add_option("--out", out_path, "Output path")->required();
  cv->add_option("--format", format, "ptb (canonical round-trip) or deps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (tr->parsed()) return cmd_train(config_path, seed_str, variant,
                                       checkpoint);
    if (ev->parsed()) return cmd_eval(checkpoint, data, embeddings);
    if (an->parsed())
      return cmd_analyze(checkpoint, data, embeddings, buckets, oracle,
                         plot_prefix);
    if (gc->parsed()) return cmd_gradcheck(variant, eps, samples);
    if (sy->parsed()) return cmd_synth(seed, size, out_path);
    if (cv->parsed()) return cmd_convert_tree(in_path, out_path, format);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
