#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spangcn {

// Constituency tree over a token sequence. Spans are half-open token
// intervals. Before stripping, every token is covered by a pre-terminal
// (a childless node over exactly one token); stripping removes those.
struct TreeNode {
  std::string label;
  int start = 0;
  int end = 0;  // half-open
  std::vector<int> children;
  // True when the node directly dominates one or more bare tokens, i.e.
  // tokens that are not wrapped in a child subtree. A pre-terminal is a
  // childless span-one node with this flag set; a constituent that merely
  // became childless through stripping keeps the flag false, which is what
  // makes stripping idempotent.
  bool direct_token = false;
};

struct ConstituencyTree {
  std::vector<std::string> tokens;
  std::vector<TreeNode> nodes;
  int root = -1;

  int size() const { return static_cast<int>(nodes.size()); }
  // Throws ValidationError on a broken invariant. A stripped tree may have
  // coverage gaps where pre-terminals used to be; an unstripped one may not.
  void validate(bool stripped) const;
};

// Parses one bracketed tree. Errors carry the byte offset of the problem.
ConstituencyTree parse_ptb(const std::string& text);

// Inverse of parse_ptb on valid trees.
std::string render_ptb(const ConstituencyTree& tree);

// Removes every node whose only child is a single token (pre-terminals).
// Idempotent; unary chains of real constituents are kept.
ConstituencyTree strip_preterminals(const ConstituencyTree& tree);

enum class Stage { Compose, Tree, Decompose };
enum class Coarse { Start, End, ParentToChild, ChildToParent, SelfLoop };

struct GraphNodeRef {
  bool is_word = false;
  int index = 0;
};

// One typed message-passing edge. `label` is the constituent label that
// keys the fine type; the coarse type keys the weight matrix.
struct SpanEdge {
  GraphNodeRef src;
  GraphNodeRef dst;
  Stage stage = Stage::Compose;
  Coarse coarse = Coarse::Start;
  std::string label;
};

struct SpanGraph {
  int word_count = 0;
  int constituent_count = 0;
  std::vector<std::string> constituent_labels;  // child-before-parent order
  std::vector<SpanEdge> edges;
};

// Compiles a stripped tree into the three-stage message-passing graph.
// Constituents come out in topological child-before-parent order; the
// result is independent of the tree's node numbering.
SpanGraph build_span_graph(const ConstituencyTree& tree);

struct DependencyTree {
  std::vector<int> heads;  // -1 marks the root token
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(heads.size()); }
  void validate() const;  // single root, acyclic, matching lengths
};

enum class HeadSide { Left, Right };
using HeadRules = std::map<std::string, HeadSide>;

// Left-head default; right-head for verbal/clausal projections. S resolves
// to its VP's head, matching the usual head-percolation convention.
HeadRules default_head_rules();

// Simplified head-percolation conversion for the dependency baseline.
DependencyTree to_dependency(const ConstituencyTree& stripped,
                             const HeadRules& rules = default_head_rules());

// Tree file: one bracketed tree per line, "-" for no tree.
std::vector<std::optional<ConstituencyTree>> load_tree_file(
    const std::string& path);

}  // namespace spangcn
