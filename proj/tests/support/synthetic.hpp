#pragma once

// Deterministic synthetic corpora for learning tests.

#include <algorithm>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "treerl/tree.hpp"

namespace treerl::testing {

struct SyntheticCorpus {
  std::vector<std::string> corpus_lines;  // "label<TAB>tokens"
  std::vector<std::string> tree_lines;    // aligned gold trees (optional)
};

// Bag-of-sentiment-words task: sentences mix polarity words with filler and
// the label is the majority polarity. Labels alternate so the majority class
// stays near one half.
inline SyntheticCorpus make_sentiment_corpus(int n_examples, int min_len,
                                             int max_len,
                                             std::mt19937_64& rng) {
  std::vector<std::string> pos, neg, filler;
  for (int i = 0; i < 30; ++i) pos.push_back("good" + std::to_string(i));
  for (int i = 0; i < 30; ++i) neg.push_back("bad" + std::to_string(i));
  for (int i = 0; i < 60; ++i) filler.push_back("it" + std::to_string(i));
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  SyntheticCorpus out;
  for (int e = 0; e < n_examples; ++e) {
    int label = e % 2;
    int len = std::uniform_int_distribution<int>(min_len, max_len)(rng);
    int strong = std::uniform_int_distribution<int>(1, std::max(1, len / 3))(rng);
    int weak = std::uniform_int_distribution<int>(0, strong - 1)(rng);
    std::vector<std::string> toks;
    for (int i = 0; i < strong; ++i) toks.push_back(pick(label ? pos : neg));
    for (int i = 0; i < weak; ++i) toks.push_back(pick(label ? neg : pos));
    while (static_cast<int>(toks.size()) < len) toks.push_back(pick(filler));
    std::shuffle(toks.begin(), toks.end(), rng);
    std::string line = std::to_string(label);
    line += '\t';
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) line += ' ';
      line += toks[i];
    }
    out.corpus_lines.push_back(std::move(line));
  }
  return out;
}

// Treebank where the word class determines both the gold structure and the
// label: class-a sentences are right-branching with label 1, class-b
// sentences left-branching with label 0. Every token reveals the class, so
// the gold actions are predictable from the policy's state features.
inline SyntheticCorpus make_branching_treebank(int n_examples, int min_len,
                                               int max_len,
                                               std::mt19937_64& rng) {
  SyntheticCorpus out;
  for (int e = 0; e < n_examples; ++e) {
    int label = e % 2;  // 1: class a, right-branching
    int len = std::uniform_int_distribution<int>(min_len, max_len)(rng);
    std::vector<std::string> toks;
    for (int i = 0; i < len; ++i) {
      int w = std::uniform_int_distribution<int>(0, 9)(rng);
      toks.push_back((label ? "a" : "b") + std::to_string(w));
    }
    std::string line = std::to_string(label);
    line += '\t';
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) line += ' ';
      line += toks[i];
    }
    out.corpus_lines.push_back(std::move(line));
    ActionSequence gold = fixed_order_actions(label
                                                  ? CompositionOrder::RightToLeft
                                                  : CompositionOrder::LeftToRight,
                                              len);
    out.tree_lines.push_back(to_sexpr(actions_to_tree(gold, len), toks));
  }
  return out;
}

inline void write_lines(const std::string& path,
                        const std::vector<std::string>& lines) {
  std::ofstream os(path);
  for (const auto& l : lines) os << l << '\n';
}

}  // namespace treerl::testing
