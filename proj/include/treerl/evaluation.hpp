#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "treerl/errors.hpp"
#include "treerl/tree.hpp"

namespace treerl {

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::size_t count = 0;
};

inline MetricReport accuracy(const std::vector<int>& predictions,
                             const std::vector<int>& golds) {
  if (predictions.size() != golds.size())
    throw DataError("accuracy: " + std::to_string(predictions.size()) +
                    " predictions vs " + std::to_string(golds.size()) +
                    " golds");
  if (predictions.empty()) throw DataError("accuracy: no examples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == golds[i]) ++hits;
  return {"accuracy", static_cast<double>(hits) / predictions.size(),
          predictions.size()};
}

inline MetricReport mse(const std::vector<double>& predictions,
                        const std::vector<double>& golds) {
  if (predictions.size() != golds.size())
    throw DataError("mse: " + std::to_string(predictions.size()) +
                    " predictions vs " + std::to_string(golds.size()) +
                    " golds");
  if (predictions.empty()) throw DataError("mse: no examples");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - golds[i];
    s += d * d;
  }
  return {"mse", s / predictions.size(), predictions.size()};
}

inline MetricReport perplexity(double total_nll, std::size_t token_count) {
  if (token_count == 0) throw DataError("perplexity: zero tokens");
  return {"perplexity", std::exp(total_nll / token_count), token_count};
}

// A tree reduced to what bracketing comparison needs.
struct TreeSpans {
  SpanSet spans;
  int leaves = 0;

  static TreeSpans of(const BinaryTree& t) {
    return {treerl::spans(t), t.num_leaves()};
  }
  static TreeSpans of(const NaryTree& t) {
    return {nary_spans(t), static_cast<int>(t.leaf_tokens().size())};
  }
};

struct F1Report {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t reference = 0;
  std::size_t count = 0;  // tree pairs
};

// Micro-averaged unlabeled bracketing F1: span counts pool over the corpus
// before the ratios are taken.
inline F1Report bracketing_f1(const std::vector<TreeSpans>& predicted,
                              const std::vector<TreeSpans>& reference) {
  if (predicted.size() != reference.size())
    throw DataError("bracketing_f1: " + std::to_string(predicted.size()) +
                    " predicted trees vs " + std::to_string(reference.size()) +
                    " references");
  if (predicted.empty()) throw DataError("bracketing_f1: no trees");
  F1Report r;
  r.count = predicted.size();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].leaves != reference[i].leaves)
      throw DataError("bracketing_f1: pair " + std::to_string(i) + " has " +
                      std::to_string(predicted[i].leaves) + " vs " +
                      std::to_string(reference[i].leaves) + " leaves");
    r.predicted += predicted[i].spans.size();
    r.reference += reference[i].spans.size();
    for (const auto& s : predicted[i].spans)
      if (reference[i].spans.count(s)) ++r.matched;
  }
  r.precision = r.predicted ? static_cast<double>(r.matched) / r.predicted : 0.0;
  r.recall = r.reference ? static_cast<double>(r.matched) / r.reference : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

inline F1Report bracketing_f1(const std::vector<BinaryTree>& predicted,
                              const std::vector<BinaryTree>& reference) {
  std::vector<TreeSpans> p, r;
  p.reserve(predicted.size());
  r.reserve(reference.size());
  for (const auto& t : predicted) p.push_back(TreeSpans::of(t));
  for (const auto& t : reference) r.push_back(TreeSpans::of(t));
  return bracketing_f1(p, r);
}

struct BranchingStats {
  double f1_vs_left = 0.0;   // against fully left-branching trees
  double f1_vs_right = 0.0;  // against fully right-branching trees
  double left_heavy_fraction = 0.0;  // internal nodes with a larger left subtree
  std::size_t count = 0;
};

namespace detail {
inline int count_leaves_below(const BinaryTree& t, int id) {
  const auto& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.leaf >= 0) return 1;
  return count_leaves_below(t, n.left) + count_leaves_below(t, n.right);
}

inline void left_heavy_walk(const BinaryTree& t, int id, std::size_t& heavy,
                            std::size_t& internal) {
  const auto& n = t.nodes[static_cast<std::size_t>(id)];
  if (n.leaf >= 0) return;
  ++internal;
  if (count_leaves_below(t, n.left) > count_leaves_below(t, n.right)) ++heavy;
  left_heavy_walk(t, n.left, heavy, internal);
  left_heavy_walk(t, n.right, heavy, internal);
}
}  // namespace detail

inline BranchingStats branching_stats(const std::vector<BinaryTree>& trees) {
  if (trees.empty()) throw DataError("branching_stats: no trees");
  std::vector<TreeSpans> pred, left, right;
  std::size_t heavy = 0, internal = 0;
  for (const auto& t : trees) {
    int n = t.num_leaves();
    pred.push_back(TreeSpans::of(t));
    left.push_back(TreeSpans::of(actions_to_tree(
        fixed_order_actions(CompositionOrder::LeftToRight, n), n)));
    right.push_back(TreeSpans::of(actions_to_tree(
        fixed_order_actions(CompositionOrder::RightToLeft, n), n)));
    detail::left_heavy_walk(t, t.root, heavy, internal);
  }
  BranchingStats out;
  out.count = trees.size();
  out.f1_vs_left = bracketing_f1(pred, left).f1;
  out.f1_vs_right = bracketing_f1(pred, right).f1;
  out.left_heavy_fraction =
      internal ? static_cast<double>(heavy) / internal : 0.0;
  return out;
}

}  // namespace treerl
