#include "spangcn/labeler.hpp"

#include <cmath>
#include <limits>

#include "spangcn/error.hpp"

namespace spangcn {

BioVocab BioVocab::from_roles(const std::set<std::string>& roles) {
  BioVocab v;
  v.labels.push_back("O");
  for (const std::string& r : roles) {
    v.labels.push_back("B-" + r);
    v.labels.push_back("I-" + r);
  }
  return v;
}

int BioVocab::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i)
    if (labels[i] == label) return i;
  return -1;
}

bool BioVocab::is_B(int i) const {
  return labels[i].rfind("B-", 0) == 0;
}

bool BioVocab::is_I(int i) const {
  return labels[i].rfind("I-", 0) == 0;
}

std::string BioVocab::role_of(int i) const {
  if (is_O(i)) return "";
  return labels[i].substr(2);
}

TransitionMask build_transition_mask(
    const BioVocab& vocab,
    const std::optional<std::set<std::string>>& allowed_roles) {
  int L = vocab.size();
  if (L < 1 || vocab.labels[0] != "O")
    throw ValidationError("BIO vocabulary must start with O");
  for (int i = 0; i < L; ++i) {
    if (vocab.is_I(i) && vocab.index_of("B-" + vocab.role_of(i)) < 0)
      throw ValidationError("I-" + vocab.role_of(i) + " without B-" +
                            vocab.role_of(i) + " in vocabulary");
  }
  TransitionMask m;
  m.label_allowed.assign(L, true);
  if (allowed_roles) {
    for (int i = 0; i < L; ++i) {
      if (!vocab.is_O(i) && !allowed_roles->count(vocab.role_of(i)))
        m.label_allowed[i] = false;
    }
  }
  m.start_allowed.assign(L, true);
  for (int i = 0; i < L; ++i) {
    if (vocab.is_I(i)) m.start_allowed[i] = false;
    if (!m.label_allowed[i]) m.start_allowed[i] = false;
  }
  m.allowed.assign(L, std::vector<bool>(L, true));
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      bool ok = true;
      if (vocab.is_I(j)) {
        // I-X must continue a same-role B-X or I-X.
        ok = (vocab.is_B(i) || vocab.is_I(i)) &&
             vocab.role_of(i) == vocab.role_of(j);
      }
      if (!m.label_allowed[i] || !m.label_allowed[j]) ok = false;
      m.allowed[i][j] = ok;
    }
  }
  return m;
}

bool bio_valid(const BioVocab& vocab, const std::vector<int>& tags) {
  int prev = -1;
  for (int t : tags) {
    if (t < 0 || t >= vocab.size()) return false;
    if (vocab.is_I(t)) {
      if (prev < 0) return false;
      if (!(vocab.is_B(prev) || vocab.is_I(prev))) return false;
      if (vocab.role_of(prev) != vocab.role_of(t)) return false;
    }
    prev = t;
  }
  return true;
}

ScoreMatrix bilinear_scores(Tape& tape, const std::vector<Var>& h,
                            int predicate, const BilinearParams& params) {
  int T = static_cast<int>(h.size());
  if (predicate < 0 || predicate >= T)
    throw ValidationError("bilinear_scores: predicate index out of range");
  Var hp = tape.relu(tape.matvec(params.w_pred, h[predicate]));
  std::vector<Var> ha(T);
  for (int t = 0; t < T; ++t)
    ha[t] = tape.relu(tape.matvec(params.w_arg, h[t]));
  // One h-vector per label: (h_pred^T U_l), then a dot per token.
  std::vector<Var> pu;
  pu.reserve(params.u.size());
  for (const Var& u : params.u) pu.push_back(tape.vecmat(hp, u));
  ScoreMatrix s;
  s.rows.reserve(T);
  for (int t = 0; t < T; ++t) {
    std::vector<Var> cells;
    cells.reserve(pu.size());
    for (const Var& p : pu) cells.push_back(tape.dot(p, ha[t]));
    s.rows.push_back(tape.stack(cells));
  }
  return s;
}

Var crf_log_likelihood(Tape& tape, const ScoreMatrix& scores,
                       const std::vector<int>& gold, const CrfWeights& crf,
                       bool softmax_before_crf) {
  int T = scores.T();
  if (T == 0) throw ValidationError("crf_log_likelihood: empty sequence");
  if (static_cast<int>(gold.size()) != T)
    throw ValidationError("crf_log_likelihood: gold length mismatch");
  int L = tape.val(scores.rows[0]).size();
  for (int y : gold)
    if (y < 0 || y >= L)
      throw ValidationError("crf_log_likelihood: gold label out of vocabulary");

  std::vector<Var> rows = scores.rows;
  if (softmax_before_crf) {
    for (Var& r : rows)
      r = tape.add_scalar(r, tape.scale(tape.logsumexp(r), -1.0));
  }

  // Forward algorithm in log space.
  Var alpha = tape.add(rows[0], crf.start);
  for (int t = 1; t < T; ++t) {
    std::vector<Var> next(L);
    for (int j = 0; j < L; ++j)
      next[j] = tape.logsumexp(tape.add(alpha, tape.col(crf.transitions, j)));
    alpha = tape.add(tape.stack(next), rows[t]);
  }
  Var log_z = tape.logsumexp(tape.add(alpha, crf.end));

  // Gold path score.
  std::vector<Var> terms;
  terms.push_back(tape.pick(crf.start, gold[0]));
  terms.push_back(tape.pick(crf.end, gold[T - 1]));
  for (int t = 0; t < T; ++t) terms.push_back(tape.pick(rows[t], gold[t]));
  for (int t = 1; t < T; ++t)
    terms.push_back(tape.pick2(crf.transitions, gold[t - 1], gold[t]));
  Var gold_score = tape.sum(tape.stack(terms));
  return tape.sub(log_z, gold_score);
}

std::vector<int> viterbi_decode(const Tensor& scores, const Tensor& transitions,
                                const Tensor& start, const Tensor& end,
                                const TransitionMask& mask) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (scores.rank() != 2 || scores.rows() == 0)
    throw ValidationError("viterbi_decode: empty score matrix");
  int T = scores.rows(), L = scores.cols();

  std::vector<double> delta(L, kNegInf);
  std::vector<std::vector<int>> back(T, std::vector<int>(L, -1));
  for (int j = 0; j < L; ++j) {
    if (!mask.start_allowed[j]) continue;
    delta[j] = start.at(j) + scores.at(0, j);
  }
  for (int t = 1; t < T; ++t) {
    std::vector<double> next(L, kNegInf);
    for (int j = 0; j < L; ++j) {
      if (!mask.label_allowed[j]) continue;
      double best = kNegInf;
      int arg = -1;
      for (int i = 0; i < L; ++i) {
        if (!mask.allowed[i][j] || delta[i] == kNegInf) continue;
        double s = delta[i] + transitions.at(i, j);
        if (s > best) {  // strict: lower i wins ties
          best = s;
          arg = i;
        }
      }
      if (arg >= 0) {
        next[j] = best + scores.at(t, j);
        back[t][j] = arg;
      }
    }
    delta = std::move(next);
  }
  double best = kNegInf;
  int last = -1;
  for (int j = 0; j < L; ++j) {
    if (delta[j] == kNegInf) continue;
    double s = delta[j] + end.at(j);
    if (s > best) {
      best = s;
      last = j;
    }
  }
  if (last < 0)
    throw ValidationError("viterbi_decode: all paths masked out");
  std::vector<int> tags(T);
  tags[T - 1] = last;
  for (int t = T - 1; t > 0; --t) tags[t - 1] = back[t][tags[t]];
  return tags;
}

}  // namespace spangcn
