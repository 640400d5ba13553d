#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "spangcn/encoder.hpp"
#include "spangcn/error.hpp"
#include "spangcn/gradcheck.hpp"
#include "spangcn/treebank.hpp"

using namespace spangcn;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.embed_dim = 6;
  cfg.pred_dim = 4;
  cfg.hidden = 8;
  cfg.lower_layers = 2;
  cfg.top_layers = 1;
  cfg.baseline_layers = 2;
  cfg.word_dropout = 0.0;
  cfg.recurrent_dropout = 0.0;
  return cfg;
}

std::vector<Tensor> values_of(Tape& tape, const std::vector<Var>& vars) {
  std::vector<Tensor> out;
  for (Var v : vars) out.push_back(tape.val(v));
  return out;
}

}  // namespace

TEST_CASE("embed_tokens dimension and predicate flag") {
  EncoderConfig cfg = tiny_config();
  ModelParams p;
  std::mt19937_64 rng(5);
  init_word_rep_params(p, cfg, rng);
  EmbeddingTable emb = EmbeddingTable::hashed(cfg.embed_dim);

  Tape tape;
  ParamVars pv(tape, p);
  std::vector<Var> x =
      embed_tokens(tape, pv, cfg, {"a", "b", "c"}, 1, emb, false, rng);
  REQUIRE(x.size() == 3);
  for (Var v : x) CHECK(tape.val(v).size() == cfg.embed_dim + cfg.pred_dim);

  // Rows 0 and 2 carry the non-predicate embedding; row 1 differs in the
  // predicate block.
  Tensor r0 = tape.val(x[0]), r1 = tape.val(x[1]), r2 = tape.val(x[2]);
  bool differs = false;
  for (int i = cfg.embed_dim; i < cfg.embed_dim + cfg.pred_dim; ++i) {
    CHECK(r0.at(i) == r2.at(i));
    if (r0.at(i) != r1.at(i)) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("embed_tokens validates the predicate index") {
  EncoderConfig cfg = tiny_config();
  ModelParams p;
  std::mt19937_64 rng(5);
  init_word_rep_params(p, cfg, rng);
  EmbeddingTable emb = EmbeddingTable::hashed(cfg.embed_dim);
  Tape tape;
  ParamVars pv(tape, p);
  CHECK_THROWS_AS(embed_tokens(tape, pv, cfg, {"a"}, 3, emb, false, rng),
                  ValidationError);
}

TEST_CASE("bilstm shape contract and determinism under dropout") {
  EncoderConfig cfg = tiny_config();
  ModelParams p;
  std::mt19937_64 rng(6);
  init_bilstm_params(p, "lstm", 5, cfg.hidden, 3, rng);

  auto run = [&](uint64_t seed) {
    Tape tape;
    ParamVars pv(tape, p);
    std::mt19937_64 drop(seed);
    std::vector<Var> in;
    std::mt19937_64 data(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 4; ++t) {
      Tensor x = Tensor::zeros({5});
      for (double& v : x.v) v = u(data);
      in.push_back(tape.leaf(x));
    }
    std::vector<Var> out =
        bilstm_encode(tape, pv, "lstm", in, 3, cfg.hidden, 0.3, true, drop);
    return values_of(tape, out);
  };
  std::vector<Tensor> a = run(77), b = run(77), c = run(78);
  REQUIRE(a.size() == 4);
  for (const Tensor& t : a) CHECK(t.size() == cfg.hidden);
  for (size_t i = 0; i < a.size(); ++i)
    for (int j = 0; j < cfg.hidden; ++j) CHECK(a[i].at(j) == b[i].at(j));
  bool same = true;
  for (size_t i = 0; i < a.size(); ++i)
    for (int j = 0; j < cfg.hidden; ++j)
      if (a[i].at(j) != c[i].at(j)) same = false;
  CHECK(!same);  // a different dropout seed changes something
}

TEST_CASE("gcn with zero parameters collapses to zero") {
  int H = 4;
  ModelParams p;
  std::mt19937_64 rng(1);
  init_gcn_stage_params(p, "g", {"pc", "cp", "self"}, H, 6, rng);
  // Zero every stage weight; keep the layer-norm gain at 1.
  for (auto& [name, t] : p.t)
    if (name.rfind("g.", 0) == 0 && name.find(".ln.gain") == std::string::npos)
      std::fill(t.v.begin(), t.v.end(), 0.0);

  Tape tape;
  ParamVars pv(tape, p);
  std::vector<Var> states = {tape.leaf(Tensor::vec({1, 2, 3, 4})),
                             tape.leaf(Tensor::vec({-1, 0, 1, 2}))};
  std::vector<GcnEdge> edges = {{0, 1, "pc", 2}, {1, 0, "cp", 1}};
  std::vector<Var> out =
      gated_gcn_layer(tape, pv, "g", states, edges, {0, 1}, 1e-5);
  for (Var v : out)
    for (double x : tape.val(v).v) CHECK(x == 0.0);
}

TEST_CASE("gcn single-edge hand computation") {
  // U = I, b = 0, gate pushed to 1 by a huge gate bias; LayerNorm with
  // gain 1 and bias 0 over [2,4,6] gives [-1.2247, 0, 1.2247]; ReLU clips
  // the negative entry.
  int H = 3;
  ModelParams p;
  std::mt19937_64 rng(1);
  init_gcn_stage_params(p, "g", {"pc"}, H, 1, rng);
  Tensor& U = p.get("g.pc.U");
  std::fill(U.v.begin(), U.v.end(), 0.0);
  for (int i = 0; i < H; ++i) U.at(i, i) = 1.0;
  std::fill(p.get("g.pc.b").v.begin(), p.get("g.pc.b").v.end(), 0.0);
  std::fill(p.get("g.pc.gu").v.begin(), p.get("g.pc.gu").v.end(), 0.0);
  p.get("g.pc.gb").at(0) = 1e3;
  std::fill(p.get("g.ln.bias").v.begin(), p.get("g.ln.bias").v.end(), 0.0);

  Tape tape;
  ParamVars pv(tape, p);
  std::vector<Var> states = {tape.leaf(Tensor::vec({2, 4, 6})),
                             tape.leaf(Tensor::vec({0, 0, 0}))};
  std::vector<GcnEdge> edges = {{0, 1, "pc", 0}};
  std::vector<Var> out =
      gated_gcn_layer(tape, pv, "g", states, edges, {1}, 1e-5);
  CHECK(tape.val(out[1]).at(0) == doctest::Approx(0.0));
  CHECK(tape.val(out[1]).at(1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(tape.val(out[1]).at(2) == doctest::Approx(1.2247).epsilon(1e-3));
  // Node 0 is not an update target and keeps its state.
  CHECK(tape.val(out[0]).at(0) == 2.0);
}

TEST_CASE("edge permutation leaves outputs unchanged within 1e-12") {
  int H = 6;
  ModelParams p;
  std::mt19937_64 rng(9);
  init_gcn_stage_params(p, "g", {"pc", "cp", "self"}, H, 4, rng);

  std::vector<GcnEdge> edges;
  std::mt19937_64 data(2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Tensor> state_vals;
  for (int n = 0; n < 5; ++n) {
    Tensor x = Tensor::zeros({H});
    for (double& v : x.v) v = u(data);
    state_vals.push_back(x);
  }
  const char* coarse[] = {"pc", "cp", "self"};
  for (int i = 0; i < 12; ++i)
    edges.push_back({static_cast<int>(data() % 5), static_cast<int>(data() % 5),
                     coarse[data() % 3], static_cast<int>(data() % 4)});

  auto run = [&](const std::vector<GcnEdge>& es) {
    Tape tape;
    ParamVars pv(tape, p);
    std::vector<Var> states;
    for (const Tensor& x : state_vals) states.push_back(tape.leaf(x));
    return values_of(tape,
                     gated_gcn_layer(tape, pv, "g", states, es,
                                     {0, 1, 2, 3, 4}, 1e-5));
  };
  std::vector<Tensor> base = run(edges);
  std::vector<GcnEdge> shuffled = edges;
  std::shuffle(shuffled.begin(), shuffled.end(), data);
  std::vector<Tensor> perm = run(shuffled);
  for (size_t i = 0; i < base.size(); ++i)
    for (int j = 0; j < H; ++j)
      CHECK(std::fabs(base[i].at(j) - perm[i].at(j)) < 1e-12);
}

TEST_CASE("all three encoders meet the shape contract") {
  AnnotatedSentence s = testutil::small_sentence();
  for (Variant variant :
       {Variant::Baseline, Variant::SpanGcn, Variant::DepGcn}) {
    SrlModel model = testutil::small_model(variant);
    SrlExample ex = model.make_example(s, s.predicates[0]);
    // predict exercises the full encoder; check it emits one tag per token.
    std::vector<int> y = model.predict(ex);
    CHECK(y.size() == s.tokens.size());
  }
}

TEST_CASE("zeroed GCN stages reduce spangcn to the residual pipeline") {
  SrlModel model = testutil::small_model(Variant::SpanGcn);
  // Silence all three stages: zero layer-norm gain and bias makes each
  // stage output ReLU(0) = 0 regardless of its other parameters.
  for (auto& [name, t] : model.params().t)
    if (name.rfind("enc.compose.", 0) == 0 ||
        name.rfind("enc.tree.", 0) == 0 ||
        name.rfind("enc.decompose.", 0) == 0)
      if (name.find(".ln.") != std::string::npos)
        std::fill(t.v.begin(), t.v.end(), 0.0);

  AnnotatedSentence s = testutil::small_sentence();
  SrlExample ex = model.make_example(s, s.predicates[0]);
  const EncoderConfig& cfg = model.config().enc;

  Tape tape;
  ParamVars pv(tape, model.params());
  std::mt19937_64 rng(0);
  std::vector<Var> words = embed_tokens(tape, pv, cfg, ex.tokens, ex.predicate,
                                        model.embeddings(), false, rng);
  std::vector<Var> full = spangcn_encode(
      tape, pv, cfg, words, *ex.graph,
      EdgeLabelVocab::from({"NP", "S", "VP"}), false, rng);
  std::vector<Var> lower = bilstm_encode(tape, pv, "enc.lower", words,
                                         cfg.lower_layers, cfg.hidden,
                                         cfg.recurrent_dropout, false, rng);
  std::vector<Var> manual = bilstm_encode(tape, pv, "enc.top", lower,
                                          cfg.top_layers, cfg.hidden,
                                          cfg.recurrent_dropout, false, rng);
  REQUIRE(full.size() == manual.size());
  for (size_t t = 0; t < full.size(); ++t)
    for (int j = 0; j < cfg.hidden; ++j)
      CHECK(tape.val(full[t]).at(j) ==
            doctest::Approx(tape.val(manual[t]).at(j)).epsilon(1e-12));
}

TEST_CASE("full-model gradients match finite differences per variant") {
  AnnotatedSentence s = testutil::small_sentence();
  for (Variant variant :
       {Variant::Baseline, Variant::SpanGcn, Variant::DepGcn}) {
    SrlModel model = testutil::small_model(variant);
    SrlExample ex = model.make_example(s, s.predicates[0]);
    GradMap analytic;
    std::mt19937_64 drop(0);
    model.loss_and_grads(ex, analytic, drop);
    std::mt19937_64 rng(55);
    GradCheckResult res = finite_diff_check(
        [&](const ModelParams& at) { return model.loss_at(ex, at); },
        model.params(), analytic, 1e-5, 120, rng);
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("encoding is deterministic in eval mode") {
  SrlModel model = testutil::small_model(Variant::SpanGcn);
  AnnotatedSentence s = testutil::small_sentence();
  SrlExample ex = model.make_example(s, s.predicates[0]);
  double a = model.loss_at(ex, model.params());
  double b = model.loss_at(ex, model.params());
  CHECK(a == b);
}

TEST_CASE("syntactic variants require a tree") {
  SrlModel model = testutil::small_model(Variant::SpanGcn);
  AnnotatedSentence s = testutil::small_sentence();
  s.tree_text.reset();
  CHECK_THROWS_AS(model.make_example(s, s.predicates[0]), ValidationError);
  SrlModel base = testutil::small_model(Variant::Baseline);
  CHECK_NOTHROW(base.make_example(s, s.predicates[0]));
}
