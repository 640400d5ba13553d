#pragma once

#include <string>
#include <vector>

#include "spangcn/corpus.hpp"

namespace spangcn {

// Aligned gold/predicted argument sets for a batch of (sentence,
// predicate) pairs.
struct PredictionSet {
  struct Item {
    int sentence_id = 0;
    int predicate = 0;
    int sentence_length = 0;
    std::vector<RoleSpan> gold;
    std::vector<RoleSpan> pred;
  };
  std::vector<Item> items;
};

struct Prf {
  long tp = 0, fp = 0, fn = 0;
  double precision() const { return tp + fp ? double(tp) / (tp + fp) : 0.0; }
  double recall() const { return tp + fn ? double(tp) / (tp + fn) : 0.0; }
  double f1() const {
    double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
};

// Exact-boundary, label-sensitive span match; micro-averaged.
Prf span_prf(const PredictionSet& results);

enum class BucketBy { SentenceLength, PredArgDistance };

struct BucketRow {
  int lo = 0, hi = 0;  // [lo, hi); hi = INT_MAX for the open last bucket
  Prf prf;
  long gold_count = 0;
};

// Distance of an argument from the predicate: 0 when the predicate falls
// inside the span, otherwise tokens from the predicate to the nearer span
// boundary.
int pred_arg_distance(const RoleSpan& span, int predicate);

// `edges` are strictly increasing lower bounds; the last bucket is open.
std::vector<BucketRow> bucket_report(const PredictionSet& results, BucketBy by,
                                     const std::vector<int>& edges);

enum class OracleFixKind {
  DropArg,
  AddArg,
  MergeSpans,
  SplitSpans,
  FixBoundary,
  FixLabels,
};

std::string to_string(OracleFixKind k);
OracleFixKind oracle_fix_from_string(const std::string& s);

// Applies exactly one correction class using gold as the oracle and
// returns the corrected prediction set. Each transformation skips a fix
// that would make the corrected span overlap another prediction, so F1 is
// non-decreasing on any input.
PredictionSet oracle_fix(const PredictionSet& results, OracleFixKind kind);

// drop, add, merge, split, fix_boundary, fix_labels in that order; on
// fixable prediction sets the final F1 is 1.
inline const std::vector<OracleFixKind>& oracle_fix_sequence() {
  static const std::vector<OracleFixKind> seq = {
      OracleFixKind::DropArg,     OracleFixKind::AddArg,
      OracleFixKind::MergeSpans,  OracleFixKind::SplitSpans,
      OracleFixKind::FixBoundary, OracleFixKind::FixLabels};
  return seq;
}

}  // namespace spangcn
