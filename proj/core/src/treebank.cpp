#include "spangcn/treebank.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "spangcn/error.hpp"

namespace spangcn {

namespace {

bool is_paren(char c) { return c == '(' || c == ')'; }
bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

struct PtbParser {
  const std::string& s;
  size_t pos = 0;
  ConstituencyTree tree;

  explicit PtbParser(const std::string& text) : s(text) {}

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError("parse error at byte " + std::to_string(pos) + ": " + msg);
  }

  void skip_ws() {
    while (pos < s.size() && is_ws(s[pos])) ++pos;
  }

  std::string atom() {
    size_t start = pos;
    while (pos < s.size() && !is_ws(s[pos]) && !is_paren(s[pos])) ++pos;
    return s.substr(start, pos - start);
  }

  int parse_node() {
    if (pos >= s.size() || s[pos] != '(') fail("expected '('");
    ++pos;
    skip_ws();
    std::string label = atom();
    if (label.empty()) fail("missing constituent label");
    int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[idx].label = label;
    tree.nodes[idx].start = static_cast<int>(tree.tokens.size());
    bool saw_anything = false;
    while (true) {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end of input (unclosed bracket)");
      if (s[pos] == ')') {
        ++pos;
        break;
      }
      if (s[pos] == '(') {
        int child = parse_node();
        tree.nodes[idx].children.push_back(child);
      } else {
        std::string tok = atom();
        if (tok.empty()) fail("expected token or subtree");
        tree.tokens.push_back(tok);
        tree.nodes[idx].direct_token = true;
      }
      saw_anything = true;
    }
    if (!saw_anything) fail("empty constituent '" + label + "'");
    tree.nodes[idx].end = static_cast<int>(tree.tokens.size());
    if (label == "-NONE-")
      fail("trace / empty element '-NONE-' not supported");
    return idx;
  }
};

}  // namespace

ConstituencyTree parse_ptb(const std::string& text) {
  PtbParser p(text);
  p.skip_ws();
  if (p.pos >= text.size()) throw ParseError("parse error at byte 0: empty input");
  p.tree.root = p.parse_node();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing text after tree");
  p.tree.validate(false);
  return p.tree;
}

std::string render_ptb(const ConstituencyTree& tree) {
  std::ostringstream os;
  // Child spans plus bare tokens in gaps reconstruct the bracketing.
  std::function<void(int)> emit = [&](int idx) {
    const TreeNode& n = tree.nodes[idx];
    os << "(" << n.label;
    std::vector<int> kids = n.children;
    std::sort(kids.begin(), kids.end(), [&](int a, int b) {
      return tree.nodes[a].start < tree.nodes[b].start;
    });
    int posn = n.start;
    size_t k = 0;
    while (posn < n.end) {
      if (k < kids.size() && tree.nodes[kids[k]].start == posn) {
        os << " ";
        emit(kids[k]);
        posn = tree.nodes[kids[k]].end;
        ++k;
      } else {
        os << " " << tree.tokens[posn];
        ++posn;
      }
    }
    os << ")";
  };
  emit(tree.root);
  return os.str();
}

void ConstituencyTree::validate(bool stripped) const {
  int T = static_cast<int>(tokens.size());
  if (root < 0 || root >= size()) throw ValidationError("tree: missing root");
  if (nodes[root].start != 0 || nodes[root].end != T)
    throw ValidationError("tree: root does not span the whole sentence");
  std::vector<int> parent_count(size(), 0);
  for (int i = 0; i < size(); ++i) {
    const TreeNode& n = nodes[i];
    if (n.start >= n.end || n.start < 0 || n.end > T)
      throw ValidationError("tree: bad span [" + std::to_string(n.start) +
                            "," + std::to_string(n.end) + ")");
    std::vector<int> kids = n.children;
    std::sort(kids.begin(), kids.end(), [&](int a, int b) {
      return nodes[a].start < nodes[b].start;
    });
    int posn = n.start;
    for (int c : kids) {
      if (c < 0 || c >= size() || c == i)
        throw ValidationError("tree: bad child index");
      ++parent_count[c];
      const TreeNode& ch = nodes[c];
      if (ch.start < posn || ch.end > n.end)
        throw ValidationError("tree: child span escapes parent or overlaps sibling");
      // Pre-strip, gaps between children must be filled by directly
      // dominated tokens (the parser builds spans that way); post-strip,
      // gaps mark removed pre-terminals and are fine.
      if (!stripped && ch.start != posn && !n.direct_token)
        throw ValidationError("tree: children do not partition the span");
      posn = ch.end;
    }
  }
  for (int i = 0; i < size(); ++i) {
    if (i == root) {
      if (parent_count[i] != 0)
        throw ValidationError("tree: root has a parent");
    } else if (parent_count[i] != 1) {
      throw ValidationError("tree: node " + std::to_string(i) +
                            " has " + std::to_string(parent_count[i]) +
                            " parents");
    }
  }
}

ConstituencyTree strip_preterminals(const ConstituencyTree& tree) {
  std::vector<bool> is_pre(tree.size(), false);
  for (int i = 0; i < tree.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    is_pre[i] =
        n.children.empty() && (n.end - n.start) == 1 && n.direct_token;
  }
  ConstituencyTree out;
  out.tokens = tree.tokens;
  std::vector<int> remap(tree.size(), -1);
  for (int i = 0; i < tree.size(); ++i) {
    if (is_pre[i]) continue;
    remap[i] = static_cast<int>(out.nodes.size());
    TreeNode n = tree.nodes[i];
    n.children.clear();
    out.nodes.push_back(std::move(n));
  }
  if (out.nodes.empty()) {
    // Degenerate single-pre-terminal tree: keep the root.
    remap[tree.root] = 0;
    TreeNode n = tree.nodes[tree.root];
    n.children.clear();
    out.nodes.push_back(std::move(n));
    is_pre[tree.root] = false;
  }
  for (int i = 0; i < tree.size(); ++i) {
    if (remap[i] < 0) continue;
    for (int c : tree.nodes[i].children) {
      if (remap[c] >= 0) out.nodes[remap[i]].children.push_back(remap[c]);
    }
  }
  out.root = remap[tree.root];
  out.validate(true);
  return out;
}

SpanGraph build_span_graph(const ConstituencyTree& tree) {
  // Canonical child-before-parent order via post-order traversal with
  // children visited left to right, so the result does not depend on the
  // input node numbering.
  std::vector<int> order;
  std::vector<int> cid(tree.size(), -1);
  std::function<void(int)> visit = [&](int idx) {
    std::vector<int> kids = tree.nodes[idx].children;
    std::sort(kids.begin(), kids.end(), [&](int a, int b) {
      return tree.nodes[a].start < tree.nodes[b].start;
    });
    for (int c : kids) visit(c);
    cid[idx] = static_cast<int>(order.size());
    order.push_back(idx);
  };
  visit(tree.root);

  SpanGraph g;
  g.word_count = static_cast<int>(tree.tokens.size());
  g.constituent_count = static_cast<int>(order.size());
  for (int idx : order) g.constituent_labels.push_back(tree.nodes[idx].label);

  auto word = [](int i) { return GraphNodeRef{true, i}; };
  auto cons = [](int i) { return GraphNodeRef{false, i}; };

  for (int c = 0; c < g.constituent_count; ++c) {
    const TreeNode& n = tree.nodes[order[c]];
    const std::string& lab = n.label;
    g.edges.push_back({word(n.start), cons(c), Stage::Compose, Coarse::Start, lab});
    g.edges.push_back({word(n.end - 1), cons(c), Stage::Compose, Coarse::End, lab});
  }
  for (int c = 0; c < g.constituent_count; ++c) {
    int idx = order[c];
    const std::string& plab = tree.nodes[idx].label;
    std::vector<int> kids = tree.nodes[idx].children;
    std::sort(kids.begin(), kids.end(), [&](int a, int b) {
      return tree.nodes[a].start < tree.nodes[b].start;
    });
    for (int ch : kids) {
      g.edges.push_back({cons(c), cons(cid[ch]), Stage::Tree,
                         Coarse::ParentToChild, plab});
      g.edges.push_back({cons(cid[ch]), cons(c), Stage::Tree,
                         Coarse::ChildToParent, tree.nodes[ch].label});
    }
  }
  for (int c = 0; c < g.constituent_count; ++c) {
    g.edges.push_back({cons(c), cons(c), Stage::Tree, Coarse::SelfLoop,
                       g.constituent_labels[c]});
  }
  for (int c = 0; c < g.constituent_count; ++c) {
    const TreeNode& n = tree.nodes[order[c]];
    const std::string& lab = n.label;
    g.edges.push_back({cons(c), word(n.start), Stage::Decompose, Coarse::Start, lab});
    g.edges.push_back({cons(c), word(n.end - 1), Stage::Decompose, Coarse::End, lab});
  }
  return g;
}

void DependencyTree::validate() const {
  if (heads.size() != labels.size())
    throw ValidationError("dependency tree: heads/labels length mismatch");
  int n = size();
  int roots = 0;
  for (int h : heads) {
    if (h == -1) ++roots;
    else if (h < 0 || h >= n) throw ValidationError("dependency tree: bad head index");
  }
  if (roots != 1) throw ValidationError("dependency tree: expected exactly one root");
  // Union-find connectivity (equivalently, acyclicity given n-1 links).
  std::vector<int> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0) continue;
    int a = find(i), b = find(heads[i]);
    if (a == b) throw ValidationError("dependency tree: cycle detected");
    uf[a] = b;
  }
}

HeadRules default_head_rules() {
  return {{"VP", HeadSide::Right}, {"PP", HeadSide::Right},
          {"SBAR", HeadSide::Right}, {"S", HeadSide::Right},
          {"SINV", HeadSide::Right}, {"SQ", HeadSide::Right}};
}

namespace {

struct SpanItem {
  int start;
  bool is_token;
  int value;  // token index or node index
};

std::vector<SpanItem> span_items(const ConstituencyTree& tree, int idx) {
  const TreeNode& n = tree.nodes[idx];
  std::vector<int> kids = n.children;
  std::sort(kids.begin(), kids.end(), [&](int a, int b) {
    return tree.nodes[a].start < tree.nodes[b].start;
  });
  std::vector<SpanItem> items;
  int posn = n.start;
  size_t k = 0;
  while (posn < n.end) {
    if (k < kids.size() && tree.nodes[kids[k]].start == posn) {
      items.push_back({posn, false, kids[k]});
      posn = tree.nodes[kids[k]].end;
      ++k;
    } else {
      items.push_back({posn, true, posn});
      ++posn;
    }
  }
  return items;
}

}  // namespace

DependencyTree to_dependency(const ConstituencyTree& tree,
                             const HeadRules& rules) {
  int T = static_cast<int>(tree.tokens.size());
  std::vector<int> head_token(tree.size(), -1);

  std::function<int(int)> compute_head = [&](int idx) -> int {
    if (head_token[idx] >= 0) return head_token[idx];
    auto items = span_items(tree, idx);
    auto it = rules.find(tree.nodes[idx].label);
    HeadSide side = it == rules.end() ? HeadSide::Left : it->second;
    const SpanItem& pick = side == HeadSide::Left ? items.front() : items.back();
    int h = pick.is_token ? pick.value : compute_head(pick.value);
    head_token[idx] = h;
    return h;
  };

  DependencyTree dep;
  dep.heads.assign(T, -2);
  dep.labels.assign(T, "dep");

  std::function<void(int)> attach = [&](int idx) {
    int h = compute_head(idx);
    for (const SpanItem& item : span_items(tree, idx)) {
      int item_head = item.is_token ? item.value : compute_head(item.value);
      if (item_head != h) dep.heads[item_head] = h;
      if (!item.is_token) attach(item.value);
    }
  };
  attach(tree.root);
  int root_tok = compute_head(tree.root);
  dep.heads[root_tok] = -1;
  for (int i = 0; i < T; ++i) {
    if (dep.heads[i] == -2) dep.heads[i] = root_tok == i ? -1 : root_tok;
  }

  // Label of a token: the highest constituent it heads; root is "root".
  std::function<void(int, int)> label_walk = [&](int idx, int depth) {
    int h = head_token[idx];
    if (dep.labels[h] == "dep" && dep.heads[h] != -1)
      dep.labels[h] = tree.nodes[idx].label;
    for (int c : tree.nodes[idx].children) label_walk(c, depth + 1);
  };
  label_walk(tree.root, 0);
  dep.labels[root_tok] = "root";
  dep.validate();
  return dep;
}

std::vector<std::optional<ConstituencyTree>> load_tree_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open tree file: " + path);
  std::vector<std::optional<ConstituencyTree>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // trim
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    std::string body = line.substr(a, b - a + 1);
    if (body == "-") {
      out.push_back(std::nullopt);
      continue;
    }
    try {
      out.push_back(parse_ptb(body));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace spangcn
