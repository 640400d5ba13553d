#pragma once

// Shared fixtures for the unit and acceptance tests: a small model
// configuration that trains in milliseconds, and the 4-token sentence with
// a 3-constituent tree used for gradient checks.

#include <random>
#include <string>

#include "spangcn/corpus.hpp"
#include "spangcn/model.hpp"

namespace testutil {

inline spangcn::ModelConfig small_config(spangcn::Variant variant) {
  spangcn::ModelConfig mc;
  mc.variant = variant;
  mc.enc.embed_dim = 8;
  mc.enc.pred_dim = 4;
  mc.enc.hidden = 10;
  mc.enc.lower_layers = 2;
  mc.enc.top_layers = 1;
  mc.enc.baseline_layers = 2;
  mc.enc.gcn_layers = 1;
  mc.enc.word_dropout = 0.0;
  mc.enc.recurrent_dropout = 0.0;
  mc.roles = {"A0", "A1"};
  mc.cons_labels = {"NP", "S", "VP"};
  mc.dep_labels = {"NP", "S", "VP", "dep", "root"};
  return mc;
}

inline spangcn::AnnotatedSentence small_sentence() {
  spangcn::AnnotatedSentence s;
  s.tokens = {"the", "cat", "sat", "down"};
  s.tree_text = "(S (NP (D the) (N cat)) (VP (V sat) (P down)))";
  spangcn::PredicateAnnotation p;
  p.index = 2;
  p.spans = {{0, 2, "A0"}, {3, 4, "A1"}};
  s.predicates = {p};
  return s;
}

// Model over the small config with deterministic initialization.
inline spangcn::SrlModel small_model(spangcn::Variant variant,
                                     uint64_t seed = 1234) {
  spangcn::SrlModel model(small_config(variant),
                          spangcn::EmbeddingTable::hashed(8));
  std::mt19937_64 rng(seed);
  model.init_params(rng);
  return model;
}

}  // namespace testutil
