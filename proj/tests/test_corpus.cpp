#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "spangcn/corpus.hpp"
#include "spangcn/error.hpp"
#include "spangcn/treebank.hpp"

using namespace spangcn;

namespace {

std::vector<std::string> tags_of(const BioVocab& v, const std::vector<int>& y) {
  std::vector<std::string> out;
  for (int i : y) out.push_back(v.labels[i]);
  return out;
}

std::vector<int> indices_of(const BioVocab& v,
                            const std::vector<std::string>& tags) {
  std::vector<int> out;
  for (const std::string& t : tags) out.push_back(v.index_of(t));
  return out;
}

// Random non-overlapping span set over `length` tokens.
std::vector<RoleSpan> random_spans(int length, std::mt19937_64& rng) {
  static const std::vector<std::string> roles = {"A0", "A1", "A2", "AM-LOC"};
  std::vector<RoleSpan> spans;
  int pos = 0;
  while (pos < length) {
    int gap = static_cast<int>(rng() % 3);
    pos += gap;
    if (pos >= length) break;
    int len = 1 + static_cast<int>(rng() % 3);
    len = std::min(len, length - pos);
    if (rng() % 2) spans.push_back({pos, pos + len, roles[rng() % roles.size()]});
    pos += len;
  }
  return spans;
}

std::string write_temp(const std::string& body) {
  std::string path = "corpus_test_tmp.jsonl";
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("spans_to_bio basic cases") {
  BioVocab v = BioVocab::from_roles({"A0", "V"});
  CHECK(tags_of(v, spans_to_bio({{0, 2, "A0"}, {3, 4, "V"}}, 4, v)) ==
        std::vector<std::string>{"B-A0", "I-A0", "O", "B-V"});
  CHECK(tags_of(v, spans_to_bio({}, 3, v)) ==
        std::vector<std::string>{"O", "O", "O"});
  CHECK_THROWS_AS(spans_to_bio({{0, 1, "A0"}, {0, 2, "V"}}, 3, v),
                  ValidationError);
}

TEST_CASE("bio_to_spans lenient repair") {
  BioVocab v = BioVocab::from_roles({"A0", "A1", "V"});
  CHECK(bio_to_spans(indices_of(v, {"B-A0", "I-A0", "O", "B-V"}), v) ==
        std::vector<RoleSpan>{{0, 2, "A0"}, {3, 4, "V"}});
  CHECK(bio_to_spans(indices_of(v, {"I-A0", "O"}), v) ==
        std::vector<RoleSpan>{{0, 1, "A0"}});
  CHECK(bio_to_spans(indices_of(v, {"B-A0", "I-A1"}), v) ==
        std::vector<RoleSpan>{{0, 1, "A0"}, {1, 2, "A1"}});
}

TEST_CASE("bio_to_spans strict mode throws on repair cases") {
  BioVocab v = BioVocab::from_roles({"A0"});
  CHECK_THROWS_AS(bio_to_spans(indices_of(v, {"I-A0", "O"}), v, true),
                  ValidationError);
  CHECK_NOTHROW(bio_to_spans(indices_of(v, {"B-A0", "I-A0"}), v, true));
}

TEST_CASE("bio round-trip property") {
  BioVocab v = BioVocab::from_roles({"A0", "A1", "A2", "AM-LOC"});
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    int length = 1 + static_cast<int>(rng() % 12);
    std::vector<RoleSpan> spans = random_spans(length, rng);
    std::vector<RoleSpan> back =
        bio_to_spans(spans_to_bio(spans, length, v), v, /*strict=*/true);
    std::sort(spans.begin(), spans.end());
    CHECK(back == spans);
  }
}

TEST_CASE("load_jsonl parses a well-formed line") {
  std::string path = write_temp(
      R"({"tokens": ["a", "b"], "predicates": [{"index": 0, "frame": null, )"
      R"("allowed_roles": null, "spans": [[1, 2, "A0"]]}], "tree": null})"
      "\n");
  auto cs = load_jsonl(path);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].tokens == std::vector<std::string>{"a", "b"});
  REQUIRE(cs[0].predicates.size() == 1);
  CHECK(cs[0].predicates[0].spans ==
        std::vector<RoleSpan>{{1, 2, "A0"}});
  CHECK(!cs[0].tree_text.has_value());
  std::remove(path.c_str());
}

TEST_CASE("load_jsonl names the offending line") {
  std::string good =
      R"({"tokens": ["a"], "predicates": [], "tree": null})";
  std::string bad =
      R"({"tokens": ["a"], "predicates": [{"index": 0, "frame": null, )"
      R"("allowed_roles": null, "spans": [[0, 5, "A0"]]}], "tree": null})";
  std::string path = write_temp(good + "\n" + bad + "\n");
  try {
    load_jsonl(path);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  int skipped = 0;
  auto cs = load_jsonl(path, /*skip_bad=*/true, &skipped);
  CHECK(cs.size() == 1);
  CHECK(skipped == 1);
  std::remove(path.c_str());
}

TEST_CASE("load_jsonl rejects broken trees early") {
  std::string path = write_temp(
      R"({"tokens": ["a"], "predicates": [], "tree": "((S"})"
      "\n");
  CHECK_THROWS_AS(load_jsonl(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("save/load round-trip is exact") {
  std::vector<AnnotatedSentence> cs = gen_synthetic(21, 15);
  std::string path = "corpus_roundtrip_tmp.jsonl";
  save_jsonl(path, cs);
  std::vector<AnnotatedSentence> back = load_jsonl(path);
  REQUIRE(back.size() == cs.size());
  for (size_t i = 0; i < cs.size(); ++i) {
    CHECK(back[i].tokens == cs[i].tokens);
    CHECK(back[i].tree_text == cs[i].tree_text);
    REQUIRE(back[i].predicates.size() == cs[i].predicates.size());
    for (size_t p = 0; p < cs[i].predicates.size(); ++p) {
      CHECK(back[i].predicates[p].index == cs[i].predicates[p].index);
      CHECK(back[i].predicates[p].frame == cs[i].predicates[p].frame);
      CHECK(back[i].predicates[p].spans == cs[i].predicates[p].spans);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("generator is deterministic and validated") {
  std::vector<AnnotatedSentence> a = gen_synthetic(7, 50);
  std::vector<AnnotatedSentence> b = gen_synthetic(7, 50);
  REQUIRE(a.size() == 50);
  REQUIRE(b.size() == 50);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].tree_text == b[i].tree_text);
    CHECK_NOTHROW(a[i].validate());
    CHECK(a[i].predicates.size() == 1);
  }
  CHECK(gen_synthetic(8, 50)[0].tokens != a[0].tokens);
}

TEST_CASE("generated role spans coincide with gold constituents") {
  for (const AnnotatedSentence& s : gen_synthetic(13, 40)) {
    ConstituencyTree t = strip_preterminals(parse_ptb(*s.tree_text));
    for (const RoleSpan& span : s.predicates[0].spans) {
      bool found = false;
      for (const TreeNode& n : t.nodes)
        if (n.start == span.start && n.end == span.end) found = true;
      CHECK(found);
    }
  }
}

TEST_CASE("generator produces both PP attachments over identical strings") {
  // The same token string must occur with both trees, so the labels are a
  // function of syntax rather than of the words.
  std::vector<AnnotatedSentence> cs = gen_synthetic(7, 4000);
  std::map<std::string, std::set<std::string>> trees_by_tokens;
  for (const AnnotatedSentence& s : cs) {
    std::ostringstream key;
    for (const std::string& t : s.tokens) key << t << " ";
    trees_by_tokens[key.str()].insert(*s.tree_text);
  }
  bool ambiguous = false;
  for (const auto& [tokens, trees] : trees_by_tokens)
    if (trees.size() >= 2) ambiguous = true;
  CHECK(ambiguous);
}

TEST_CASE("collect_roles finds the full inventory") {
  std::set<std::string> roles = collect_roles(gen_synthetic(7, 100));
  CHECK(roles.count("A0"));
  CHECK(roles.count("A1"));
  CHECK(roles.count("AM-LOC"));
}
