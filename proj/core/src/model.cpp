#include "spangcn/model.hpp"

#include <json.hpp>

#include "spangcn/error.hpp"

namespace spangcn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::SpanGcn: return "spangcn";
    case Variant::DepGcn: return "depgcn";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "baseline") return Variant::Baseline;
  if (s == "spangcn") return Variant::SpanGcn;
  if (s == "depgcn") return Variant::DepGcn;
  throw ValidationError("unknown model variant '" + s +
                        "' (expected baseline|spangcn|depgcn)");
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = spangcn::to_string(variant);
  j["embed_dim"] = enc.embed_dim;
  j["pred_dim"] = enc.pred_dim;
  j["hidden"] = enc.hidden;
  j["lower_layers"] = enc.lower_layers;
  j["top_layers"] = enc.top_layers;
  j["baseline_layers"] = enc.baseline_layers;
  j["gcn_layers"] = enc.gcn_layers;
  j["word_dropout"] = enc.word_dropout;
  j["recurrent_dropout"] = enc.recurrent_dropout;
  j["ln_eps"] = enc.ln_eps;
  j["softmax_before_crf"] = softmax_before_crf;
  j["roles"] = roles;
  j["cons_labels"] = cons_labels;
  j["dep_labels"] = dep_labels;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  ModelConfig c;
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.enc.embed_dim = j.at("embed_dim").get<int>();
  c.enc.pred_dim = j.at("pred_dim").get<int>();
  c.enc.hidden = j.at("hidden").get<int>();
  c.enc.lower_layers = j.at("lower_layers").get<int>();
  c.enc.top_layers = j.at("top_layers").get<int>();
  c.enc.baseline_layers = j.at("baseline_layers").get<int>();
  c.enc.gcn_layers = j.at("gcn_layers").get<int>();
  c.enc.word_dropout = j.at("word_dropout").get<double>();
  c.enc.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  c.enc.ln_eps = j.at("ln_eps").get<double>();
  c.softmax_before_crf = j.at("softmax_before_crf").get<bool>();
  c.roles = j.at("roles").get<std::vector<std::string>>();
  c.cons_labels = j.at("cons_labels").get<std::vector<std::string>>();
  c.dep_labels = j.at("dep_labels").get<std::vector<std::string>>();
  return c;
}

SrlModel::SrlModel(ModelConfig cfg, EmbeddingTable emb)
    : cfg_(std::move(cfg)), emb_(std::move(emb)) {
  if (emb_.dim() != cfg_.enc.embed_dim)
    throw ValidationError("embedding dim does not match model config");
  vocab_ = BioVocab::from_roles(
      std::set<std::string>(cfg_.roles.begin(), cfg_.roles.end()));
  cons_vocab_ = EdgeLabelVocab::from(
      std::set<std::string>(cfg_.cons_labels.begin(), cfg_.cons_labels.end()));
  dep_vocab_ = EdgeLabelVocab::from(
      std::set<std::string>(cfg_.dep_labels.begin(), cfg_.dep_labels.end()));
  hard_mask_ = build_transition_mask(vocab_);
}

void SrlModel::init_params(std::mt19937_64& rng) {
  params_ = ModelParams();
  init_word_rep_params(params_, cfg_.enc, rng);
  switch (cfg_.variant) {
    case Variant::Baseline:
      init_baseline_params(params_, cfg_.enc, rng);
      break;
    case Variant::SpanGcn:
      init_spangcn_params(params_, cfg_.enc, cons_vocab_, rng);
      break;
    case Variant::DepGcn:
      init_depgcn_params(params_, cfg_.enc, dep_vocab_, rng);
      break;
  }
  int H = cfg_.enc.hidden;
  params_.add_xavier("scorer.w_pred", H, H, rng);
  params_.add_xavier("scorer.w_arg", H, H, rng);
  for (int l = 0; l < vocab_.size(); ++l)
    params_.add_xavier("scorer.U." + std::to_string(l), H, H, rng);
  params_.add("crf.trans", {vocab_.size(), vocab_.size()});
  params_.add_vector("crf.start", vocab_.size(), 0.0);
  params_.add_vector("crf.end", vocab_.size(), 0.0);
}

SrlExample SrlModel::make_example(const AnnotatedSentence& s,
                                  const PredicateAnnotation& p) const {
  SrlExample ex;
  ex.tokens = s.tokens;
  ex.predicate = p.index;
  ex.gold_spans = p.spans;
  ex.gold = spans_to_bio(p.spans, static_cast<int>(s.tokens.size()), vocab_);
  ex.allowed_roles = p.allowed_roles;
  if (cfg_.variant != Variant::Baseline) {
    if (!s.tree_text)
      throw ValidationError("tree required for the " +
                            spangcn::to_string(cfg_.variant) + " variant");
    ConstituencyTree stripped = strip_preterminals(parse_ptb(*s.tree_text));
    if (cfg_.variant == Variant::SpanGcn)
      ex.graph = build_span_graph(stripped);
    else
      ex.dep = to_dependency(stripped);
  }
  return ex;
}

std::vector<SrlExample> SrlModel::make_examples(
    const std::vector<AnnotatedSentence>& corpus) const {
  std::vector<SrlExample> out;
  for (const AnnotatedSentence& s : corpus)
    for (const PredicateAnnotation& p : s.predicates)
      out.push_back(make_example(s, p));
  return out;
}

std::vector<Var> SrlModel::encode(Tape& tape, ParamVars& pv,
                                  const SrlExample& ex, bool train,
                                  std::mt19937_64& rng) const {
  std::vector<Var> words = embed_tokens(tape, pv, cfg_.enc, ex.tokens,
                                        ex.predicate, emb_, train, rng);
  switch (cfg_.variant) {
    case Variant::Baseline:
      return baseline_encode(tape, pv, cfg_.enc, words, train, rng);
    case Variant::SpanGcn:
      if (!ex.graph) throw ValidationError("example lacks a span graph");
      return spangcn_encode(tape, pv, cfg_.enc, words, *ex.graph, cons_vocab_,
                            train, rng);
    case Variant::DepGcn:
      if (!ex.dep) throw ValidationError("example lacks a dependency tree");
      return depgcn_encode(tape, pv, cfg_.enc, words, *ex.dep, dep_vocab_,
                           train, rng);
  }
  throw ValidationError("unreachable variant");
}

namespace {

BilinearParams bind_bilinear(ParamVars& pv, int label_count) {
  BilinearParams bp;
  bp.w_pred = pv("scorer.w_pred");
  bp.w_arg = pv("scorer.w_arg");
  for (int l = 0; l < label_count; ++l)
    bp.u.push_back(pv("scorer.U." + std::to_string(l)));
  return bp;
}

}  // namespace

Var SrlModel::nll_on_tape(Tape& tape, ParamVars& pv, const SrlExample& ex,
                          bool train, std::mt19937_64& rng) const {
  std::vector<Var> h = encode(tape, pv, ex, train, rng);
  ScoreMatrix s =
      bilinear_scores(tape, h, ex.predicate, bind_bilinear(pv, vocab_.size()));
  CrfWeights crf{pv("crf.trans"), pv("crf.start"), pv("crf.end")};
  return crf_log_likelihood(tape, s, ex.gold, crf, cfg_.softmax_before_crf);
}

double SrlModel::loss_and_grads(const SrlExample& ex, GradMap& grads,
                                std::mt19937_64& dropout_rng) const {
  Tape tape;
  ParamVars pv(tape, params_);
  Var nll = nll_on_tape(tape, pv, ex, /*train=*/true, dropout_rng);
  tape.backward(nll);
  grads = pv.grads();
  return tape.val(nll).at(0);
}

double SrlModel::loss_at(const SrlExample& ex, const ModelParams& at) const {
  Tape tape;
  ParamVars pv(tape, at);
  std::mt19937_64 rng(0);  // unused: dropout disabled
  return tape.val(nll_on_tape(tape, pv, ex, /*train=*/false, rng)).at(0);
}

std::vector<int> SrlModel::predict(const SrlExample& ex) const {
  Tape tape;
  ParamVars pv(tape, params_);
  std::mt19937_64 rng(0);
  std::vector<Var> h = encode(tape, pv, ex, /*train=*/false, rng);
  ScoreMatrix s =
      bilinear_scores(tape, h, ex.predicate, bind_bilinear(pv, vocab_.size()));
  Tensor scores({s.T(), vocab_.size()});
  for (int t = 0; t < s.T(); ++t)
    for (int l = 0; l < vocab_.size(); ++l)
      scores.at(t, l) = tape.val(s.rows[t]).at(l);
  TransitionMask mask =
      ex.allowed_roles ? build_transition_mask(vocab_, ex.allowed_roles)
                       : hard_mask_;
  return viterbi_decode(scores, params_.get("crf.trans"),
                        params_.get("crf.start"), params_.get("crf.end"),
                        mask);
}

std::vector<RoleSpan> SrlModel::predict_spans(const SrlExample& ex) const {
  return bio_to_spans(predict(ex), vocab_, /*strict=*/false);
}

}  // namespace spangcn
