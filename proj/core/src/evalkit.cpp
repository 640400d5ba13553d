#include "spangcn/evalkit.hpp"

#include <algorithm>
#include <climits>

#include "spangcn/error.hpp"

namespace spangcn {

namespace {

bool overlaps(const RoleSpan& a, const RoleSpan& b) {
  return a.start < b.end && b.start < a.end;
}

bool same_boundaries(const RoleSpan& a, const RoleSpan& b) {
  return a.start == b.start && a.end == b.end;
}

// Matches each prediction to at most one gold span (exact match).
std::vector<int> match_gold(const std::vector<RoleSpan>& gold,
                            const std::vector<RoleSpan>& pred) {
  std::vector<int> match(pred.size(), -1);
  std::vector<bool> used(gold.size(), false);
  for (size_t i = 0; i < pred.size(); ++i) {
    for (size_t g = 0; g < gold.size(); ++g) {
      if (!used[g] && pred[i] == gold[g]) {
        match[i] = static_cast<int>(g);
        used[g] = true;
        break;
      }
    }
  }
  return match;
}

}  // namespace

Prf span_prf(const PredictionSet& results) {
  Prf prf;
  for (const auto& item : results.items) {
    std::vector<int> match = match_gold(item.gold, item.pred);
    long tp = std::count_if(match.begin(), match.end(),
                            [](int m) { return m >= 0; });
    prf.tp += tp;
    prf.fp += static_cast<long>(item.pred.size()) - tp;
    prf.fn += static_cast<long>(item.gold.size()) - tp;
  }
  return prf;
}

int pred_arg_distance(const RoleSpan& span, int predicate) {
  if (predicate >= span.start && predicate < span.end) return 0;
  return std::min(std::abs(predicate - span.start),
                  std::abs(predicate - (span.end - 1)));
}

std::vector<BucketRow> bucket_report(const PredictionSet& results, BucketBy by,
                                     const std::vector<int>& edges) {
  if (edges.empty()) throw ValidationError("bucket_report: no bucket edges");
  for (size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1])
      throw ValidationError("bucket_report: edges must be strictly increasing");

  std::vector<BucketRow> rows;
  for (size_t i = 0; i < edges.size(); ++i) {
    BucketRow r;
    r.lo = edges[i];
    r.hi = i + 1 < edges.size() ? edges[i + 1] : INT_MAX;
    rows.push_back(r);
  }
  auto bucket_of = [&](int value) {
    int b = -1;
    for (size_t i = 0; i < rows.size(); ++i)
      if (value >= rows[i].lo && value < rows[i].hi)
        b = static_cast<int>(i);
    return b;
  };

  for (const auto& item : results.items) {
    auto key = [&](const RoleSpan& s) {
      return by == BucketBy::SentenceLength
                 ? item.sentence_length
                 : pred_arg_distance(s, item.predicate);
    };
    std::vector<int> match = match_gold(item.gold, item.pred);
    std::vector<bool> gold_hit(item.gold.size(), false);
    for (size_t i = 0; i < item.pred.size(); ++i) {
      int b = bucket_of(key(item.pred[i]));
      if (b < 0) continue;
      if (match[i] >= 0) {
        ++rows[b].prf.tp;
        gold_hit[match[i]] = true;
      } else {
        ++rows[b].prf.fp;
      }
    }
    for (size_t g = 0; g < item.gold.size(); ++g) {
      int b = bucket_of(key(item.gold[g]));
      if (b < 0) continue;
      ++rows[b].gold_count;
      if (!gold_hit[g]) ++rows[b].prf.fn;
    }
  }
  return rows;
}

std::string to_string(OracleFixKind k) {
  switch (k) {
    case OracleFixKind::DropArg: return "drop_arg";
    case OracleFixKind::AddArg: return "add_arg";
    case OracleFixKind::MergeSpans: return "merge_spans";
    case OracleFixKind::SplitSpans: return "split_spans";
    case OracleFixKind::FixBoundary: return "fix_boundary";
    case OracleFixKind::FixLabels: return "fix_labels";
  }
  return "?";
}

OracleFixKind oracle_fix_from_string(const std::string& s) {
  for (OracleFixKind k : oracle_fix_sequence())
    if (to_string(k) == s) return k;
  throw ValidationError("unknown oracle transformation '" + s + "'");
}

namespace {

bool would_overlap_others(const std::vector<RoleSpan>& pred,
                          const RoleSpan& candidate,
                          const std::vector<bool>& removed, size_t self) {
  for (size_t i = 0; i < pred.size(); ++i) {
    if (i == self || removed[i]) continue;
    if (overlaps(pred[i], candidate)) return true;
  }
  return false;
}

void fix_item(PredictionSet::Item& item, OracleFixKind kind) {
  const std::vector<RoleSpan>& gold = item.gold;
  std::vector<RoleSpan> pred = item.pred;
  std::sort(pred.begin(), pred.end());

  switch (kind) {
    case OracleFixKind::DropArg: {
      std::vector<RoleSpan> kept;
      for (const RoleSpan& p : pred) {
        bool any = std::any_of(gold.begin(), gold.end(), [&](const RoleSpan& g) {
          return overlaps(p, g);
        });
        if (any) kept.push_back(p);
      }
      pred = std::move(kept);
      break;
    }
    case OracleFixKind::AddArg: {
      for (const RoleSpan& g : gold) {
        bool any = std::any_of(pred.begin(), pred.end(), [&](const RoleSpan& p) {
          return overlaps(p, g);
        });
        if (!any) pred.push_back(g);
      }
      break;
    }
    case OracleFixKind::MergeSpans: {
      std::vector<bool> removed(pred.size(), false);
      std::vector<RoleSpan> added;
      for (const RoleSpan& g : gold) {
        std::vector<size_t> inside;
        int lo = INT_MAX, hi = INT_MIN;
        for (size_t i = 0; i < pred.size(); ++i) {
          if (removed[i]) continue;
          if (pred[i].start >= g.start && pred[i].end <= g.end) {
            inside.push_back(i);
            lo = std::min(lo, pred[i].start);
            hi = std::max(hi, pred[i].end);
          }
        }
        if (inside.size() >= 2 && lo == g.start && hi == g.end) {
          for (size_t i : inside) removed[i] = true;
          added.push_back(g);
        }
      }
      std::vector<RoleSpan> next;
      for (size_t i = 0; i < pred.size(); ++i)
        if (!removed[i]) next.push_back(pred[i]);
      next.insert(next.end(), added.begin(), added.end());
      pred = std::move(next);
      break;
    }
    case OracleFixKind::SplitSpans: {
      std::vector<RoleSpan> next;
      for (const RoleSpan& p : pred) {
        std::vector<RoleSpan> inside;
        for (const RoleSpan& g : gold)
          if (g.start >= p.start && g.end <= p.end) inside.push_back(g);
        std::sort(inside.begin(), inside.end());
        if (inside.size() >= 2 && inside.front().start == p.start &&
            inside.back().end == p.end) {
          next.insert(next.end(), inside.begin(), inside.end());
        } else {
          next.push_back(p);
        }
      }
      pred = std::move(next);
      break;
    }
    case OracleFixKind::FixBoundary: {
      std::vector<bool> removed(pred.size(), false);
      for (size_t i = 0; i < pred.size(); ++i) {
        bool exact = std::any_of(gold.begin(), gold.end(), [&](const RoleSpan& g) {
          return same_boundaries(pred[i], g);
        });
        if (exact) continue;
        std::vector<const RoleSpan*> hits;
        for (const RoleSpan& g : gold)
          if (overlaps(pred[i], g)) hits.push_back(&g);
        if (hits.size() != 1) continue;
        RoleSpan fixed{hits[0]->start, hits[0]->end, pred[i].label};
        if (would_overlap_others(pred, fixed, removed, i)) continue;
        pred[i] = fixed;
      }
      break;
    }
    case OracleFixKind::FixLabels: {
      for (RoleSpan& p : pred) {
        for (const RoleSpan& g : gold) {
          if (same_boundaries(p, g)) {
            p.label = g.label;
            break;
          }
        }
      }
      break;
    }
  }
  std::sort(pred.begin(), pred.end());
  item.pred = std::move(pred);
}

}  // namespace

PredictionSet oracle_fix(const PredictionSet& results, OracleFixKind kind) {
  PredictionSet out = results;
  for (auto& item : out.items) fix_item(item, kind);
  return out;
}

}  // namespace spangcn
