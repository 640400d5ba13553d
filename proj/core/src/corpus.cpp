#include "spangcn/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "spangcn/error.hpp"

namespace spangcn {

void AnnotatedSentence::validate() const {
  int T = static_cast<int>(tokens.size());
  if (T == 0) throw ValidationError("sentence: empty token list");
  std::set<int> seen;
  for (const PredicateAnnotation& p : predicates) {
    if (p.index < 0 || p.index >= T)
      throw ValidationError("sentence: predicate index out of range");
    if (!seen.insert(p.index).second)
      throw ValidationError("sentence: duplicate predicate index");
    std::vector<RoleSpan> spans = p.spans;
    std::sort(spans.begin(), spans.end());
    int prev_end = -1;
    for (const RoleSpan& s : spans) {
      if (s.start >= s.end || s.start < 0 || s.end > T)
        throw ValidationError("sentence: span [" + std::to_string(s.start) +
                              "," + std::to_string(s.end) + ") out of bounds");
      if (s.start < prev_end)
        throw ValidationError("sentence: overlapping role spans");
      prev_end = s.end;
    }
  }
}

std::vector<int> spans_to_bio(const std::vector<RoleSpan>& spans, int length,
                              const BioVocab& vocab) {
  std::vector<int> tags(length, 0);
  std::vector<bool> used(length, false);
  for (const RoleSpan& s : spans) {
    if (s.start >= s.end || s.start < 0 || s.end > length)
      throw ValidationError("spans_to_bio: span out of range");
    int b = vocab.index_of("B-" + s.label);
    int i = vocab.index_of("I-" + s.label);
    if (b < 0 || i < 0)
      throw ValidationError("spans_to_bio: role '" + s.label +
                            "' not in vocabulary");
    for (int t = s.start; t < s.end; ++t) {
      if (used[t]) throw ValidationError("spans_to_bio: overlapping spans");
      used[t] = true;
      tags[t] = t == s.start ? b : i;
    }
  }
  return tags;
}

std::vector<RoleSpan> bio_to_spans(const std::vector<int>& tags,
                                   const BioVocab& vocab, bool strict) {
  std::vector<RoleSpan> spans;
  std::string open_role;
  int open_start = -1;
  auto close = [&](int end) {
    if (open_start >= 0) spans.push_back({open_start, end, open_role});
    open_start = -1;
    open_role.clear();
  };
  for (int t = 0; t < static_cast<int>(tags.size()); ++t) {
    int y = tags[t];
    if (y < 0 || y >= vocab.size())
      throw ValidationError("bio_to_spans: tag index out of vocabulary");
    if (vocab.is_O(y)) {
      close(t);
    } else if (vocab.is_B(y)) {
      close(t);
      open_role = vocab.role_of(y);
      open_start = t;
    } else {  // I-X
      if (open_start >= 0 && open_role == vocab.role_of(y)) continue;
      if (strict)
        throw ValidationError("bio_to_spans: dangling I-" + vocab.role_of(y) +
                              " at position " + std::to_string(t));
      close(t);  // lenient repair: open a new span here
      open_role = vocab.role_of(y);
      open_start = t;
    }
  }
  close(static_cast<int>(tags.size()));
  return spans;
}

namespace {

nlohmann::ordered_json sentence_to_json(const AnnotatedSentence& s) {
  nlohmann::ordered_json j;
  j["tokens"] = s.tokens;
  nlohmann::ordered_json preds = nlohmann::ordered_json::array();
  for (const PredicateAnnotation& p : s.predicates) {
    nlohmann::ordered_json pj;
    pj["index"] = p.index;
    pj["frame"] = p.frame ? nlohmann::ordered_json(*p.frame)
                          : nlohmann::ordered_json(nullptr);
    if (p.allowed_roles) {
      pj["allowed_roles"] = std::vector<std::string>(p.allowed_roles->begin(),
                                                     p.allowed_roles->end());
    } else {
      pj["allowed_roles"] = nullptr;
    }
    nlohmann::ordered_json spans = nlohmann::ordered_json::array();
    for (const RoleSpan& r : p.spans)
      spans.push_back({r.start, r.end, r.label});
    pj["spans"] = std::move(spans);
    preds.push_back(std::move(pj));
  }
  j["predicates"] = std::move(preds);
  j["tree"] = s.tree_text ? nlohmann::ordered_json(*s.tree_text)
                          : nlohmann::ordered_json(nullptr);
  return j;
}

AnnotatedSentence sentence_from_json(const nlohmann::json& j) {
  AnnotatedSentence s;
  s.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const auto& pj : j.at("predicates")) {
    PredicateAnnotation p;
    p.index = pj.at("index").get<int>();
    if (pj.contains("frame") && !pj["frame"].is_null())
      p.frame = pj["frame"].get<std::string>();
    if (pj.contains("allowed_roles") && !pj["allowed_roles"].is_null()) {
      auto v = pj["allowed_roles"].get<std::vector<std::string>>();
      p.allowed_roles = std::set<std::string>(v.begin(), v.end());
    }
    for (const auto& sj : pj.at("spans")) {
      RoleSpan r;
      r.start = sj.at(0).get<int>();
      r.end = sj.at(1).get<int>();
      r.label = sj.at(2).get<std::string>();
      p.spans.push_back(std::move(r));
    }
    s.predicates.push_back(std::move(p));
  }
  if (j.contains("tree") && !j["tree"].is_null())
    s.tree_text = j["tree"].get<std::string>();
  return s;
}

}  // namespace

std::vector<AnnotatedSentence> load_jsonl(const std::string& path,
                                          bool skip_bad, int* skipped) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file: " + path);
  std::vector<AnnotatedSentence> out;
  std::string line;
  int lineno = 0, bad = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      AnnotatedSentence s = sentence_from_json(nlohmann::json::parse(line));
      s.validate();
      if (s.tree_text) parse_ptb(*s.tree_text);  // reject broken trees early
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      if (skip_bad) {
        ++bad;
        continue;
      }
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (skipped) *skipped = bad;
  return out;
}

void save_jsonl(const std::string& path,
                const std::vector<AnnotatedSentence>& sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file: " + path);
  for (const AnnotatedSentence& s : sentences)
    out << sentence_to_json(s).dump() << "\n";
}

namespace {

// Fragment under construction: tokens plus bracket text.
struct Frag {
  std::vector<std::string> tokens;
  std::string bracket;
};

const std::vector<std::string> kNouns = {"cat", "dog", "man", "woman",
                                         "park", "tree", "house", "car"};
const std::vector<std::string> kAdjs = {"big", "old", "red"};
const std::vector<std::string> kVerbs = {"saw", "liked", "found", "chased"};
const std::vector<std::string> kPreps = {"in", "near", "with"};

template <typename Rng>
const std::string& pick_one(const std::vector<std::string>& xs, Rng& rng) {
  std::uniform_int_distribution<size_t> d(0, xs.size() - 1);
  return xs[d(rng)];
}

template <typename Rng>
Frag make_simple_np(Rng& rng, bool allow_adj) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Frag f;
  f.tokens.push_back("the");
  std::string inner = "(DT the)";
  if (allow_adj && u(rng) < 0.4) {
    const std::string& adj = pick_one(kAdjs, rng);
    f.tokens.push_back(adj);
    inner += " (JJ " + adj + ")";
  }
  const std::string& n = pick_one(kNouns, rng);
  f.tokens.push_back(n);
  f.bracket = "(NP " + inner + " (NN " + n + "))";
  return f;
}

template <typename Rng>
Frag make_pp(Rng& rng) {
  const std::string& p = pick_one(kPreps, rng);
  Frag np = make_simple_np(rng, false);
  Frag f;
  f.tokens.push_back(p);
  f.tokens.insert(f.tokens.end(), np.tokens.begin(), np.tokens.end());
  f.bracket = "(PP (IN " + p + ") " + np.bracket + ")";
  return f;
}

}  // namespace

std::vector<AnnotatedSentence> gen_synthetic(uint64_t seed, int size,
                                             int grammar_depth) {
  if (size < 1) throw ValidationError("gen_synthetic: size must be >= 1");
  if (grammar_depth < 1) throw ValidationError("gen_synthetic: bad depth");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<AnnotatedSentence> corpus;
  corpus.reserve(size);
  for (int k = 0; k < size; ++k) {
    Frag subj = make_simple_np(rng, true);
    const std::string& verb = pick_one(kVerbs, rng);
    Frag obj = make_simple_np(rng, grammar_depth >= 2);

    bool has_pp = u(rng) < 0.75;
    bool pp_on_np = has_pp && u(rng) < 0.5;
    Frag pp;
    if (has_pp) pp = make_pp(rng);

    AnnotatedSentence s;
    s.tokens = subj.tokens;
    int verb_pos = static_cast<int>(s.tokens.size());
    s.tokens.push_back(verb);
    int obj_start = static_cast<int>(s.tokens.size());
    s.tokens.insert(s.tokens.end(), obj.tokens.begin(), obj.tokens.end());
    int obj_end = static_cast<int>(s.tokens.size());
    int pp_start = obj_end, pp_end = obj_end;
    if (has_pp) {
      s.tokens.insert(s.tokens.end(), pp.tokens.begin(), pp.tokens.end());
      pp_end = static_cast<int>(s.tokens.size());
    }

    std::string obj_bracket = obj.bracket;
    std::string vp_tail;
    if (has_pp) {
      if (pp_on_np)
        obj_bracket = "(NP " + obj.bracket + " " + pp.bracket + ")";
      else
        vp_tail = " " + pp.bracket;
    }
    s.tree_text = "(S " + subj.bracket + " (VP (VBD " + verb + ") " +
                  obj_bracket + vp_tail + "))";

    PredicateAnnotation pred;
    pred.index = verb_pos;
    pred.frame = verb;
    pred.spans.push_back({0, verb_pos, "A0"});
    // A1 covers the whole object constituent: with an NP-attached PP the
    // span runs through the PP, otherwise it stops at the object noun.
    pred.spans.push_back(
        {obj_start, pp_on_np ? pp_end : obj_end, "A1"});
    if (has_pp && !pp_on_np) pred.spans.push_back({pp_start, pp_end, "AM-LOC"});
    s.predicates.push_back(std::move(pred));
    s.validate();
    corpus.push_back(std::move(s));
  }
  return corpus;
}

std::set<std::string> collect_roles(const std::vector<AnnotatedSentence>& cs) {
  std::set<std::string> roles;
  for (const AnnotatedSentence& s : cs)
    for (const PredicateAnnotation& p : s.predicates)
      for (const RoleSpan& r : p.spans) roles.insert(r.label);
  return roles;
}

}  // namespace spangcn
