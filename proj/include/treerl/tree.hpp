#pragma once

#include <cassert>
#include <cctype>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "treerl/errors.hpp"

namespace treerl {

enum class Action : unsigned char { Shift, Reduce };

using ActionSequence = std::vector<Action>;

// (start, end) token intervals, end exclusive. One per internal node; the
// whole-sentence span is included, single-token spans are not.
using SpanSet = std::set<std::pair<int, int>>;

// Binary tree over token positions 0..N-1, stored as an index arena so
// copies are cheap. Leaves carry the token position.
struct BinaryTree {
  struct Node {
    int left = -1;
    int right = -1;
    int leaf = -1;
  };
  std::vector<Node> nodes;
  int root = -1;

  bool is_leaf(int id) const { return nodes[static_cast<std::size_t>(id)].leaf >= 0; }

  int add_leaf(int token) {
    Node n;
    n.leaf = token;
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }

  int add_internal(int left, int right) {
    Node n;
    n.left = left;
    n.right = right;
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }

  static BinaryTree leaf(int token) {
    BinaryTree t;
    t.root = t.add_leaf(token);
    return t;
  }

  int num_leaves() const {
    int n = 0;
    for (const Node& node : nodes)
      if (node.leaf >= 0) ++n;
    return n;
  }
};

inline bool equal_subtree(const BinaryTree& a, int ia, const BinaryTree& b,
                          int ib) {
  const auto& na = a.nodes[static_cast<std::size_t>(ia)];
  const auto& nb = b.nodes[static_cast<std::size_t>(ib)];
  if ((na.leaf >= 0) != (nb.leaf >= 0)) return false;
  if (na.leaf >= 0) return na.leaf == nb.leaf;
  return equal_subtree(a, na.left, b, nb.left) &&
         equal_subtree(a, na.right, b, nb.right);
}

inline bool operator==(const BinaryTree& a, const BinaryTree& b) {
  if (a.root < 0 || b.root < 0) return a.root == b.root;
  return equal_subtree(a, a.root, b, b.root);
}

inline std::string format_actions(const ActionSequence& actions) {
  std::string s;
  s.reserve(actions.size());
  for (Action a : actions) s += a == Action::Shift ? 'S' : 'R';
  return s;
}

inline ActionSequence parse_actions(const std::string& s) {
  ActionSequence out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == 'S')
      out.push_back(Action::Shift);
    else if (c == 'R')
      out.push_back(Action::Reduce);
    else
      throw DataError(std::string("bad action character '") + c + "' in \"" +
                      s + "\"");
  }
  return out;
}

// True iff the sequence has exactly n shifts, n-1 reduces, and no prefix
// underflows the stack or overruns the buffer.
inline bool actions_valid(const ActionSequence& actions, int n) {
  if (static_cast<int>(actions.size()) != 2 * n - 1) return false;
  int stack = 0, shifted = 0;
  for (Action a : actions) {
    if (a == Action::Shift) {
      if (++shifted > n) return false;
      ++stack;
    } else {
      if (stack < 2) return false;
      --stack;
    }
  }
  return stack == 1 && shifted == n;
}

// Stack simulation: SHIFT pushes the next leaf, REDUCE pops (right = top,
// left = second) and pushes their parent.
inline BinaryTree actions_to_tree(const ActionSequence& actions, int n) {
  if (n < 1) throw DataError("actions_to_tree: empty sentence");
  BinaryTree tree;
  std::vector<int> stack;
  int next = 0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    if (actions[t] == Action::Shift) {
      if (next >= n)
        throw DataError("actions_to_tree: shift past " + std::to_string(n) +
                        " tokens at step " + std::to_string(t));
      stack.push_back(tree.add_leaf(next++));
    } else {
      if (stack.size() < 2)
        throw DataError("actions_to_tree: reduce on stack of " +
                        std::to_string(stack.size()) + " at step " +
                        std::to_string(t));
      int right = stack.back();
      stack.pop_back();
      int left = stack.back();
      stack.pop_back();
      stack.push_back(tree.add_internal(left, right));
    }
  }
  if (stack.size() != 1 || next != n)
    throw DataError("actions_to_tree: sequence leaves " +
                    std::to_string(stack.size()) + " stack entries after " +
                    std::to_string(next) + "/" + std::to_string(n) +
                    " shifts");
  tree.root = stack[0];
  return tree;
}

// Post-order emission: leaf -> SHIFT, internal node -> children then REDUCE.
inline ActionSequence tree_to_actions(const BinaryTree& tree) {
  ActionSequence out;
  std::vector<std::pair<int, bool>> work;  // (node, expanded)
  work.emplace_back(tree.root, false);
  while (!work.empty()) {
    auto [id, expanded] = work.back();
    work.pop_back();
    const auto& n = tree.nodes[static_cast<std::size_t>(id)];
    if (n.leaf >= 0) {
      out.push_back(Action::Shift);
    } else if (expanded) {
      out.push_back(Action::Reduce);
    } else {
      work.emplace_back(id, true);
      work.emplace_back(n.right, false);
      work.emplace_back(n.left, false);
    }
  }
  return out;
}

namespace detail {
inline std::pair<int, int> collect_spans(const BinaryTree& t, int id,
                                         SpanSet& out) {
  const auto& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.leaf >= 0) return {n.leaf, n.leaf + 1};
  auto l = collect_spans(t, n.left, out);
  auto r = collect_spans(t, n.right, out);
  std::pair<int, int> span{l.first, r.second};
  if (span.second - span.first >= 2) out.insert(span);
  return span;
}
}  // namespace detail

inline SpanSet spans(const BinaryTree& tree) {
  SpanSet out;
  if (tree.root >= 0) detail::collect_spans(tree, tree.root, out);
  return out;
}

enum class CompositionOrder { LeftToRight, RightToLeft };

// Left-to-right composition builds the fully left-branching tree
// (S S R (S R)*); right-to-left builds the fully right-branching one
// (S^n R^{n-1}).
inline ActionSequence fixed_order_actions(CompositionOrder order, int n) {
  if (n < 1) throw DataError("fixed_order_actions: empty sentence");
  ActionSequence out;
  out.reserve(static_cast<std::size_t>(2 * n - 1));
  if (order == CompositionOrder::LeftToRight) {
    out.push_back(Action::Shift);
    for (int i = 1; i < n; ++i) {
      out.push_back(Action::Shift);
      out.push_back(Action::Reduce);
    }
  } else {
    for (int i = 0; i < n; ++i) out.push_back(Action::Shift);
    for (int i = 1; i < n; ++i) out.push_back(Action::Reduce);
  }
  return out;
}

// N-ary tree with string tokens at the leaves, as parsed from one
// s-expression. Internal labels are already discarded.
struct NaryTree {
  struct Node {
    std::string token;       // leaves only
    std::vector<int> kids;   // internal only
    bool leaf() const { return kids.empty(); }
  };
  std::vector<Node> nodes;
  int root = -1;

  void leaf_tokens_rec(int id, std::vector<std::string>& out) const {
    const Node& n = nodes[static_cast<std::size_t>(id)];
    if (n.leaf()) {
      out.push_back(n.token);
      return;
    }
    for (int k : n.kids) leaf_tokens_rec(k, out);
  }

  std::vector<std::string> leaf_tokens() const {
    std::vector<std::string> out;
    if (root >= 0) leaf_tokens_rec(root, out);
    return out;
  }
};

namespace detail {

struct SexprItem {
  bool atom = false;
  std::string text;
  std::vector<int> kids;
};

struct SexprParse {
  std::vector<SexprItem> items;
  int root = -1;
};

inline SexprParse parse_sexpr_raw(const std::string& text) {
  SexprParse p;
  std::vector<int> stack;  // open groups
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
  };
  skip_ws();
  if (i >= text.size()) throw DataError("empty s-expression");
  int top_level = -1;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '(') {
      p.items.push_back(SexprItem{});
      int id = static_cast<int>(p.items.size()) - 1;
      if (!stack.empty())
        p.items[static_cast<std::size_t>(stack.back())].kids.push_back(id);
      else if (top_level >= 0)
        throw DataError("multiple top-level s-expressions on one line");
      else
        top_level = id;
      stack.push_back(id);
      ++i;
    } else if (c == ')') {
      if (stack.empty()) throw DataError("unbalanced ')' in s-expression");
      int closed = stack.back();
      if (p.items[static_cast<std::size_t>(closed)].kids.empty())
        throw DataError("empty constituent '()' in s-expression");
      stack.pop_back();
      ++i;
    } else {
      std::size_t start = i;
      while (i < text.size() && text[i] != '(' && text[i] != ')' &&
             !std::isspace(static_cast<unsigned char>(text[i])))
        ++i;
      p.items.push_back(SexprItem{});
      int id = static_cast<int>(p.items.size()) - 1;
      p.items[static_cast<std::size_t>(id)].atom = true;
      p.items[static_cast<std::size_t>(id)].text = text.substr(start, i - start);
      if (!stack.empty())
        p.items[static_cast<std::size_t>(stack.back())].kids.push_back(id);
      else if (top_level >= 0)
        throw DataError("multiple top-level s-expressions on one line");
      else
        top_level = id;
    }
  }
  if (!stack.empty()) throw DataError("unbalanced '(' in s-expression");
  p.root = top_level;
  return p;
}

// A tree is read as label-headed (Penn style) iff every group has at least
// two elements and starts with an atom. Otherwise groups are plain children
// lists and single-atom groups like "(w)" are leaves. This resolves, e.g.,
// "(X w)" as the leaf w but "((a b) c)" as three leaves.
inline bool sexpr_is_labeled(const SexprParse& p, int id) {
  const SexprItem& it = p.items[static_cast<std::size_t>(id)];
  if (it.atom) return true;
  if (it.kids.size() < 2) return false;
  if (!p.items[static_cast<std::size_t>(it.kids[0])].atom) return false;
  for (std::size_t k = 1; k < it.kids.size(); ++k)
    if (!sexpr_is_labeled(p, it.kids[k])) return false;
  return true;
}

inline int build_nary(const SexprParse& p, int id, bool labeled,
                      NaryTree& out) {
  const SexprItem& it = p.items[static_cast<std::size_t>(id)];
  if (it.atom) {
    out.nodes.push_back(NaryTree::Node{it.text, {}});
    return static_cast<int>(out.nodes.size()) - 1;
  }
  std::size_t first = labeled ? 1 : 0;
  std::size_t nkids = it.kids.size() - first;
  assert(nkids >= 1);
  if (nkids == 1) {
    // unary constituents collapse: "(X w)" is the leaf w, "((a b))" is (a b)
    return build_nary(p, it.kids[first], labeled, out);
  }
  std::vector<int> kids;
  for (std::size_t k = first; k < it.kids.size(); ++k)
    kids.push_back(build_nary(p, it.kids[k], labeled, out));
  out.nodes.push_back(NaryTree::Node{"", std::move(kids)});
  return static_cast<int>(out.nodes.size()) - 1;
}

}  // namespace detail

// Parses one s-expression into an n-ary tree of leaf tokens, discarding any
// POS/label heads. Leaf order is preserved.
inline NaryTree parse_sexpr(const std::string& text) {
  detail::SexprParse raw = detail::parse_sexpr_raw(text);
  bool labeled = detail::sexpr_is_labeled(raw, raw.root);
  NaryTree out;
  out.root = detail::build_nary(raw, raw.root, labeled, out);
  return out;
}

namespace detail {

inline int binarize_rec(const NaryTree& t, int id, bool right_fold,
                        BinaryTree& out, int& next_token) {
  const NaryTree::Node& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.leaf()) return out.add_leaf(next_token++);
  if (n.kids.size() == 1)
    return binarize_rec(t, n.kids[0], right_fold, out, next_token);
  if (!right_fold) {
    int acc = binarize_rec(t, n.kids[0], right_fold, out, next_token);
    for (std::size_t k = 1; k < n.kids.size(); ++k) {
      int rhs = binarize_rec(t, n.kids[k], right_fold, out, next_token);
      acc = out.add_internal(acc, rhs);
    }
    return acc;
  }
  // right fold still consumes leaves left-to-right; build children first
  std::vector<int> kids;
  for (int kid : n.kids)
    kids.push_back(binarize_rec(t, kid, right_fold, out, next_token));
  int acc = kids.back();
  for (std::size_t k = kids.size() - 1; k-- > 0;)
    acc = out.add_internal(kids[k], acc);
  return acc;
}

}  // namespace detail

// Left-binarization by default: children c1..ck fold as ((((c1 c2) c3)...) ck).
// Unary chains collapse. Leaves become token positions in reading order.
inline BinaryTree binarize(const NaryTree& t, bool right_fold = false) {
  if (t.root < 0) throw DataError("binarize: empty tree");
  BinaryTree out;
  int next_token = 0;
  out.root = detail::binarize_rec(t, t.root, right_fold, out, next_token);
  return out;
}

// Spans of an n-ary tree directly (no binarization), same conventions as
// spans(BinaryTree): one entry per constituent covering >= 2 tokens,
// duplicates from unary chains merge in the set.
namespace detail {
inline std::pair<int, int> nary_spans_rec(const NaryTree& t, int id,
                                          SpanSet& out, int& next_token) {
  const NaryTree::Node& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.leaf()) {
    int pos = next_token++;
    return {pos, pos + 1};
  }
  int lo = -1, hi = -1;
  for (int kid : n.kids) {
    auto s = nary_spans_rec(t, kid, out, next_token);
    if (lo < 0) lo = s.first;
    hi = s.second;
  }
  if (hi - lo >= 2) out.insert({lo, hi});
  return {lo, hi};
}
}  // namespace detail

inline SpanSet nary_spans(const NaryTree& t) {
  SpanSet out;
  int next_token = 0;
  if (t.root >= 0) detail::nary_spans_rec(t, t.root, out, next_token);
  return out;
}

namespace detail {
inline void to_sexpr_rec(const BinaryTree& t, int id,
                         const std::vector<std::string>& tokens,
                         std::string& out) {
  const auto& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.leaf >= 0) {
    out += '(';
    out += tokens[static_cast<std::size_t>(n.leaf)];
    out += ')';
    return;
  }
  out += '(';
  to_sexpr_rec(t, n.left, tokens, out);
  out += ' ';
  to_sexpr_rec(t, n.right, tokens, out);
  out += ')';
}
}  // namespace detail

// Unlabeled emission with every leaf parenthesized, e.g. "((a) ((b) (c)))",
// so the output re-parses to the same shape (bare "(a (b c))" would read as
// a label-headed tree). A single-token sentence prints as "(w)".
inline std::string to_sexpr(const BinaryTree& t,
                            const std::vector<std::string>& tokens) {
  std::string out;
  if (t.root >= 0) detail::to_sexpr_rec(t, t.root, tokens, out);
  return out;
}

}  // namespace treerl
