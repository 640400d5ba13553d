#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spangcn/labeler.hpp"
#include "spangcn/treebank.hpp"

namespace spangcn {

struct RoleSpan {
  int start = 0;
  int end = 0;  // half-open, start < end
  std::string label;

  bool operator==(const RoleSpan& o) const {
    return start == o.start && end == o.end && label == o.label;
  }
  bool operator<(const RoleSpan& o) const {
    if (start != o.start) return start < o.start;
    if (end != o.end) return end < o.end;
    return label < o.label;
  }
};

struct PredicateAnnotation {
  int index = 0;
  std::optional<std::string> frame;
  std::optional<std::set<std::string>> allowed_roles;
  std::vector<RoleSpan> spans;
};

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::vector<PredicateAnnotation> predicates;
  std::optional<std::string> tree_text;  // bracketed source, if any

  void validate() const;  // bounds, overlap, distinct predicate indices
};

// First token of a span gets B-label, the rest I-label, everything else O.
std::vector<int> spans_to_bio(const std::vector<RoleSpan>& spans, int length,
                              const BioVocab& vocab);

// Inverse on well-formed input; a standalone I-X opens a new span
// (lenient repair). Strict mode throws on malformed sequences instead.
std::vector<RoleSpan> bio_to_spans(const std::vector<int>& tags,
                                   const BioVocab& vocab,
                                   bool strict = false);

// JSONL: {"tokens": [...], "predicates": [{"index", "frame",
// "allowed_roles", "spans"}], "tree": "..."|null}. Errors name the line;
// with skip_bad set, bad lines are dropped and counted instead.
std::vector<AnnotatedSentence> load_jsonl(const std::string& path,
                                          bool skip_bad = false,
                                          int* skipped = nullptr);
void save_jsonl(const std::string& path,
                const std::vector<AnnotatedSentence>& sentences);

// Small PCFG corpus with one predicate per sentence. Role spans coincide
// with constituents of the gold tree: the subject NP is A0, the object
// constituent is A1 (whose right boundary depends on PP attachment), and a
// verb-attached PP is AM-LOC. Identical token strings occur with both
// attachments, so the targets are a function of the tree, not the words.
std::vector<AnnotatedSentence> gen_synthetic(uint64_t seed, int size,
                                             int grammar_depth = 2);

// Roles observed across a corpus (for building the BIO vocabulary).
std::set<std::string> collect_roles(const std::vector<AnnotatedSentence>& cs);

}  // namespace spangcn
