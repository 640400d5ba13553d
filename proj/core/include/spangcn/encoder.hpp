#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "spangcn/embeddings.hpp"
#include "spangcn/params.hpp"
#include "spangcn/tape.hpp"
#include "spangcn/treebank.hpp"

namespace spangcn {

struct EncoderConfig {
  int embed_dim = 100;
  int pred_dim = 100;  // predicate-indicator embedding size
  int hidden = 300;
  int lower_layers = 4;
  int top_layers = 2;
  int baseline_layers = 8;
  int gcn_layers = 1;  // per stage
  double word_dropout = 0.1;
  double recurrent_dropout = 0.1;
  double ln_eps = 1e-5;
};

// Edge-label vocabulary with a reserved trailing UNK id.
struct EdgeLabelVocab {
  std::vector<std::string> labels;

  static EdgeLabelVocab from(const std::set<std::string>& labels);
  int id(const std::string& label) const;  // UNK fallback
  int size_with_unk() const { return static_cast<int>(labels.size()) + 1; }
};

// Binds named parameters to tape leaves on first use, so one tensor enters
// a given tape exactly once however many ops consume it.
class ParamVars {
 public:
  ParamVars(Tape& tape, const ModelParams& params)
      : tape_(&tape), params_(&params) {}

  Var operator()(const std::string& name);

  // Gradient per registered parameter; zeros for parameters never bound
  // to this tape (off-path parameters).
  GradMap grads() const;

 private:
  Tape* tape_;
  const ModelParams* params_;
  std::map<std::string, Var> bound_;
};

// -- parameter registration ----------------------------------------------

void init_word_rep_params(ModelParams& p, const EncoderConfig& cfg,
                          std::mt19937_64& rng);
void init_bilstm_params(ModelParams& p, const std::string& prefix,
                        int input_dim, int hidden, int layers,
                        std::mt19937_64& rng);
// One GCN stage: per coarse type a weight matrix and gate vector, per
// (coarse, label) a bias row and gate bias, plus the stage layer norm.
void init_gcn_stage_params(ModelParams& p, const std::string& prefix,
                           const std::vector<std::string>& coarse_types,
                           int hidden, int fine_count, std::mt19937_64& rng);

// -- forward pieces ------------------------------------------------------

// x_t = dropout(layernorm(w_t)) . predemb(t). Pretrained vectors enter the
// tape as constants and stay frozen.
std::vector<Var> embed_tokens(Tape& tape, ParamVars& pv,
                              const EncoderConfig& cfg,
                              const std::vector<std::string>& tokens,
                              int predicate, const EmbeddingTable& emb,
                              bool train, std::mt19937_64& rng);

// Alternating-stack BiLSTM with highway connections and shared-mask
// recurrent dropout on the hidden state. Layer 1 runs forward, layer 2
// backward, and so on; each layer consumes the previous layer's output.
std::vector<Var> bilstm_encode(Tape& tape, ParamVars& pv,
                               const std::string& prefix,
                               const std::vector<Var>& inputs, int layers,
                               int hidden, double recurrent_dropout,
                               bool train, std::mt19937_64& rng);

struct GcnEdge {
  int src = 0;
  int dst = 0;
  std::string coarse;
  int fine = 0;  // fine-type id (label id within the stage vocabulary)
};

// h'_v = ReLU(LayerNorm(sum_u g_vu (U_Tc h_u + b_Tf))),
// g_vu = sigmoid(u_Tc . h_u + b_Tf). Only nodes listed in `update_nodes`
// are rewritten; a listed node with no in-edges gets the zero
// pre-activation (LayerNorm maps it to its bias).
std::vector<Var> gated_gcn_layer(Tape& tape, ParamVars& pv,
                                 const std::string& prefix,
                                 const std::vector<Var>& states,
                                 const std::vector<GcnEdge>& edges,
                                 const std::vector<int>& update_nodes,
                                 double ln_eps);

// Full three-stage syntactic encoder: lower BiLSTM, constituent
// composition, constituent tree GCN, decomposition, residual word states,
// top BiLSTM.
std::vector<Var> spangcn_encode(Tape& tape, ParamVars& pv,
                                const EncoderConfig& cfg,
                                const std::vector<Var>& word_reps,
                                const SpanGraph& graph,
                                const EdgeLabelVocab& cons_labels, bool train,
                                std::mt19937_64& rng);

// Same outer pipeline with one word-level GCN over the dependency tree in
// place of the three span stages.
std::vector<Var> depgcn_encode(Tape& tape, ParamVars& pv,
                               const EncoderConfig& cfg,
                               const std::vector<Var>& word_reps,
                               const DependencyTree& dep,
                               const EdgeLabelVocab& dep_labels, bool train,
                               std::mt19937_64& rng);

// Syntax-agnostic baseline: one deep alternating BiLSTM.
std::vector<Var> baseline_encode(Tape& tape, ParamVars& pv,
                                 const EncoderConfig& cfg,
                                 const std::vector<Var>& word_reps,
                                 bool train, std::mt19937_64& rng);

// Registers every parameter a given variant's encoder can touch.
void init_spangcn_params(ModelParams& p, const EncoderConfig& cfg,
                         const EdgeLabelVocab& cons_labels,
                         std::mt19937_64& rng);
void init_depgcn_params(ModelParams& p, const EncoderConfig& cfg,
                        const EdgeLabelVocab& dep_labels,
                        std::mt19937_64& rng);
void init_baseline_params(ModelParams& p, const EncoderConfig& cfg,
                          std::mt19937_64& rng);

}  // namespace spangcn
