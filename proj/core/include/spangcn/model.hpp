#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spangcn/corpus.hpp"
#include "spangcn/embeddings.hpp"
#include "spangcn/encoder.hpp"
#include "spangcn/labeler.hpp"
#include "spangcn/params.hpp"

namespace spangcn {

enum class Variant { Baseline, SpanGcn, DepGcn };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelConfig {
  Variant variant = Variant::SpanGcn;
  EncoderConfig enc;
  bool softmax_before_crf = false;
  std::vector<std::string> roles;        // role inventory, sorted
  std::vector<std::string> cons_labels;  // constituent labels (UNK implied)
  std::vector<std::string> dep_labels;   // dependency labels (UNK implied)

  std::string to_json() const;
  static ModelConfig from_json(const std::string& json_text);
};

// One preprocessed (sentence, predicate) training/eval unit.
struct SrlExample {
  std::vector<std::string> tokens;
  int predicate = 0;
  std::vector<int> gold;  // BIO indices; empty if unlabeled
  std::vector<RoleSpan> gold_spans;
  std::optional<SpanGraph> graph;     // spangcn variant
  std::optional<DependencyTree> dep;  // depgcn variant
  std::optional<std::set<std::string>> allowed_roles;
};

// Encoder + bilinear scorer + CRF for one chosen variant.
class SrlModel {
 public:
  SrlModel(ModelConfig cfg, EmbeddingTable emb);

  void init_params(std::mt19937_64& rng);
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  const BioVocab& vocab() const { return vocab_; }
  const EmbeddingTable& embeddings() const { return emb_; }

  // Builds the variant-appropriate example; parses/strips the tree or
  // converts it to dependencies as needed. Throws if the variant needs a
  // tree and the sentence has none.
  SrlExample make_example(const AnnotatedSentence& s,
                          const PredicateAnnotation& p) const;
  std::vector<SrlExample> make_examples(
      const std::vector<AnnotatedSentence>& corpus) const;

  // Training-mode forward/backward; returns the NLL and fills `grads`.
  double loss_and_grads(const SrlExample& ex, GradMap& grads,
                        std::mt19937_64& dropout_rng) const;

  // Deterministic objective (dropout off) at arbitrary parameter values;
  // this is what the finite-difference oracle perturbs.
  double loss_at(const SrlExample& ex, const ModelParams& at) const;

  // Masked Viterbi decode (hard BIO mask plus the example's frame mask).
  std::vector<int> predict(const SrlExample& ex) const;
  std::vector<RoleSpan> predict_spans(const SrlExample& ex) const;

 private:
  std::vector<Var> encode(Tape& tape, ParamVars& pv, const SrlExample& ex,
                          bool train, std::mt19937_64& rng) const;
  Var nll_on_tape(Tape& tape, ParamVars& pv, const SrlExample& ex, bool train,
                  std::mt19937_64& rng) const;

  ModelConfig cfg_;
  EmbeddingTable emb_;
  ModelParams params_;
  BioVocab vocab_;
  EdgeLabelVocab cons_vocab_;
  EdgeLabelVocab dep_vocab_;
  TransitionMask hard_mask_;
};

}  // namespace spangcn
