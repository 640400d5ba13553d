#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spangcn/params.hpp"
#include "spangcn/tape.hpp"

namespace spangcn {

// BIO tag vocabulary. Index 0 is always O.
struct BioVocab {
  std::vector<std::string> labels;

  static BioVocab from_roles(const std::set<std::string>& roles);

  int size() const { return static_cast<int>(labels.size()); }
  int index_of(const std::string& label) const;  // -1 if absent
  bool is_O(int i) const { return i == 0; }
  bool is_B(int i) const;
  bool is_I(int i) const;
  std::string role_of(int i) const;  // "" for O
};

// Decode-time masks. Training stays unconstrained; the hard BIO mask and
// the optional per-sentence frame mask apply only in Viterbi.
struct TransitionMask {
  std::vector<std::vector<bool>> allowed;  // L x L
  std::vector<bool> start_allowed;         // sequence-initial tags
  std::vector<bool> label_allowed;         // frame mask; all true if no frame
};

// Forbids O->I-X, B-X->I-Y and I-X->I-Y for X!=Y, and sequence-initial
// I-X. With allowed_roles given, B-X/I-X outside the set are globally off;
// O is always allowed. Throws if some I-X lacks its B-X.
TransitionMask build_transition_mask(
    const BioVocab& vocab,
    const std::optional<std::set<std::string>>& allowed_roles = std::nullopt);

// Strict BIO validity of a tag sequence (no repair).
bool bio_valid(const BioVocab& vocab, const std::vector<int>& tags);

struct CrfWeights {
  Var transitions;  // L x L
  Var start;        // L
  Var end;          // L
};

// Per-token per-label scores for one predicate, recorded on the tape.
struct ScoreMatrix {
  std::vector<Var> rows;  // T vectors of length L
  int T() const { return static_cast<int>(rows.size()); }
};

struct BilinearParams {
  Var w_pred;  // H x H projection
  Var w_arg;   // H x H projection
  std::vector<Var> u;  // one H x H bilinear form per label
};

// s[t,l] = ReLU(W_pred h_p)^T U_l ReLU(W_arg h_t).
ScoreMatrix bilinear_scores(Tape& tape, const std::vector<Var>& h,
                            int predicate, const BilinearParams& params);

// Negative conditional log-likelihood of a gold tag sequence under the
// linear-chain CRF; logZ by the forward algorithm in log space.
// `softmax_before_crf` log-normalizes each row first (shifts logZ, leaves
// the decode argmax unchanged).
Var crf_log_likelihood(Tape& tape, const ScoreMatrix& scores,
                       const std::vector<int>& gold, const CrfWeights& crf,
                       bool softmax_before_crf = false);

// Masked Viterbi over plain score values. Ties break toward the lower
// label index. Throws if every path is masked out (cannot happen while O
// is allowed; asserted).
std::vector<int> viterbi_decode(const Tensor& scores, const Tensor& transitions,
                                const Tensor& start, const Tensor& end,
                                const TransitionMask& mask);

}  // namespace spangcn
