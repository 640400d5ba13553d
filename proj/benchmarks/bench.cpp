#include <benchmark/benchmark.h>

#include <random>
#include <set>

#include "spangcn/corpus.hpp"
#include "spangcn/labeler.hpp"
#include "spangcn/model.hpp"
#include "spangcn/tape.hpp"

using namespace spangcn;

namespace {

SrlModel make_model(Variant variant) {
  std::vector<AnnotatedSentence> data = gen_synthetic(7, 50);
  ModelConfig mc;
  mc.variant = variant;
  mc.enc.embed_dim = 16;
  mc.enc.pred_dim = 8;
  mc.enc.hidden = 32;
  mc.enc.lower_layers = 2;
  mc.enc.top_layers = 1;
  mc.enc.baseline_layers = 8;
  mc.enc.word_dropout = 0.0;
  mc.enc.recurrent_dropout = 0.0;
  std::set<std::string> roles = collect_roles(data);
  mc.roles.assign(roles.begin(), roles.end());
  mc.cons_labels = {"NP", "PP", "S", "VP"};
  mc.dep_labels = {"NP", "PP", "S", "VP", "dep", "root"};
  SrlModel model(mc, EmbeddingTable::hashed(mc.enc.embed_dim));
  std::mt19937_64 rng(1234);
  model.init_params(rng);
  return model;
}

SrlExample make_example(const SrlModel& model) {
  std::vector<AnnotatedSentence> data = gen_synthetic(7, 50);
  // Pick the longest sentence so the benchmark is not dominated by setup.
  size_t best = 0;
  for (size_t i = 0; i < data.size(); ++i)
    if (data[i].tokens.size() > data[best].tokens.size()) best = i;
  return model.make_example(data[best], data[best].predicates[0]);
}

void BM_LossAndGrads(benchmark::State& state, Variant variant) {
  SrlModel model = make_model(variant);
  SrlExample ex = make_example(model);
  std::mt19937_64 drop(0);
  for (auto _ : state) {
    GradMap grads;
    benchmark::DoNotOptimize(model.loss_and_grads(ex, grads, drop));
  }
}

void BM_Predict(benchmark::State& state, Variant variant) {
  SrlModel model = make_model(variant);
  SrlExample ex = make_example(model);
  for (auto _ : state) {
    std::vector<int> tags = model.predict(ex);
    benchmark::DoNotOptimize(tags);
  }
}

void BM_ViterbiDecode(benchmark::State& state) {
  int T = static_cast<int>(state.range(0));
  int L = 9;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 1.0);
  Tensor scores = Tensor::zeros({T, L});
  for (double& x : scores.v) x = nd(rng);
  Tensor trans = Tensor::zeros({L, L});
  for (double& x : trans.v) x = nd(rng);
  Tensor start = Tensor::zeros({L}), end = Tensor::zeros({L});
  for (double& x : start.v) x = nd(rng);
  for (double& x : end.v) x = nd(rng);
  TransitionMask mask =
      build_transition_mask(BioVocab::from_roles({"A0", "A1", "A2", "AM-LOC"}));
  for (auto _ : state) {
    std::vector<int> tags = viterbi_decode(scores, trans, start, end, mask);
    benchmark::DoNotOptimize(tags);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_LossAndGrads, baseline, Variant::Baseline);
BENCHMARK_CAPTURE(BM_LossAndGrads, spangcn, Variant::SpanGcn);
BENCHMARK_CAPTURE(BM_LossAndGrads, depgcn, Variant::DepGcn);
BENCHMARK_CAPTURE(BM_Predict, baseline, Variant::Baseline);
BENCHMARK_CAPTURE(BM_Predict, spangcn, Variant::SpanGcn);
BENCHMARK_CAPTURE(BM_Predict, depgcn, Variant::DepGcn);
BENCHMARK(BM_ViterbiDecode)->Arg(10)->Arg(50)->Arg(200);

BENCHMARK_MAIN();
