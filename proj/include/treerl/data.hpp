#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "treerl/errors.hpp"
#include "treerl/model.hpp"
#include "treerl/tree.hpp"
#include "treerl/vocab.hpp"

namespace treerl {

inline std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// One corpus line before vocabulary mapping.
struct RawExample {
  std::size_t lineno = 0;
  int label = -1;
  double score = 0.0;
  std::vector<std::string> tokens;
  std::vector<std::string> tokens2;
  std::string gold_sexpr;
  std::string gold_sexpr2;
};

namespace detail {

inline int parse_label(const std::string& s, Task task, const std::string& at) {
  if (task == Task::Entailment) {
    if (s == "entailment") return 0;
    if (s == "contradiction") return 1;
    if (s == "neutral") return 2;
  }
  try {
    std::size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(at + ": bad label '" + s + "'");
  }
}

inline double parse_score(const std::string& s, const std::string& at) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(at + ": bad score '" + s + "'");
  }
}

}  // namespace detail

// Line formats, tab-separated:
//   classification: label TAB sentence
//   pairs:          label-or-score TAB sentence1 TAB sentence2
//                   [TAB gold-sexpr1 TAB gold-sexpr2]
//   generation:     sentence1 TAB sentence2
inline std::vector<RawExample> read_corpus(const std::string& path,
                                           Task task) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read corpus: " + path);
  std::vector<RawExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string at = path + ":" + std::to_string(lineno);
    std::vector<std::string> fields = split_fields(line);
    RawExample ex;
    ex.lineno = lineno;
    switch (task) {
      case Task::Sentiment: {
        if (fields.size() != 2)
          throw DataError(at + ": expected 'label<TAB>sentence', got " +
                          std::to_string(fields.size()) + " fields");
        ex.label = detail::parse_label(fields[0], task, at);
        if (ex.label < 0 || ex.label > 1)
          throw DataError(at + ": sentiment label must be 0 or 1");
        ex.tokens = split_tokens(fields[1]);
        break;
      }
      case Task::Relatedness:
      case Task::Entailment: {
        if (fields.size() != 3 && fields.size() != 5)
          throw DataError(at +
                          ": expected 'label<TAB>s1<TAB>s2' with optional two "
                          "gold trees, got " +
                          std::to_string(fields.size()) + " fields");
        if (task == Task::Relatedness)
          ex.score = detail::parse_score(fields[0], at);
        else {
          ex.label = detail::parse_label(fields[0], task, at);
          if (ex.label < 0 || ex.label > 2)
            throw DataError(at + ": entailment label must be 0..2 or "
                                 "entailment/contradiction/neutral");
        }
        ex.tokens = split_tokens(fields[1]);
        ex.tokens2 = split_tokens(fields[2]);
        if (fields.size() == 5) {
          ex.gold_sexpr = fields[3];
          ex.gold_sexpr2 = fields[4];
        }
        break;
      }
      case Task::Generation: {
        if (fields.size() != 2)
          throw DataError(at + ": expected 'sentence1<TAB>sentence2', got " +
                          std::to_string(fields.size()) + " fields");
        ex.tokens = split_tokens(fields[0]);
        ex.tokens2 = split_tokens(fields[1]);
        break;
      }
    }
    if (ex.tokens.empty()) throw DataError(at + ": empty sentence");
    if (task != Task::Sentiment && ex.tokens2.empty())
      throw DataError(at + ": empty second sentence");
    out.push_back(std::move(ex));
  }
  return out;
}

// Gold-tree files align line-for-line with the corpus: one s-expression per
// line for single-sentence tasks, two tab-separated for pair tasks.
inline void attach_gold_trees(std::vector<RawExample>& examples,
                              const std::string& path, Task task) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read gold trees: " + path);
  std::string line;
  std::size_t lineno = 0;
  for (auto& ex : examples) {
    if (!std::getline(is, line))
      throw DataError(path + ": ends after " + std::to_string(lineno) +
                      " lines but the corpus has " +
                      std::to_string(examples.size()));
    ++lineno;
    std::string at = path + ":" + std::to_string(lineno);
    if (pair_task(task)) {
      std::vector<std::string> fields = split_fields(line);
      if (fields.size() != 2)
        throw DataError(at + ": expected two tab-separated trees");
      ex.gold_sexpr = fields[0];
      ex.gold_sexpr2 = fields[1];
    } else {
      ex.gold_sexpr = line;
    }
  }
  if (std::getline(is, line) && !line.empty())
    throw DataError(path + ": more lines than the corpus has examples");
}

// Vocabulary-mapped example with gold structures precomputed into action
// sequences (for training) and span trees (for bracketing evaluation).
struct Example {
  std::size_t lineno = 0;
  int label = -1;
  double score = 0.0;
  std::vector<int> tokens;
  std::vector<int> tokens2;
  std::optional<ActionSequence> gold_actions;
  std::optional<ActionSequence> gold_actions2;
  std::optional<NaryTree> gold_tree;
  std::optional<NaryTree> gold_tree2;
};

struct Dataset {
  Task task = Task::Sentiment;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

inline Vocabulary build_vocabulary(const std::vector<RawExample>& train) {
  Vocabulary v;
  for (const auto& ex : train) {
    for (const auto& t : ex.tokens) v.add(t);
    for (const auto& t : ex.tokens2) v.add(t);
  }
  return v;
}

namespace detail {

inline void attach_parsed_gold(Example& out, const std::string& sexpr,
                               std::size_t want_leaves, bool right_binarize,
                               bool second, const std::string& at) {
  NaryTree tree;
  try {
    tree = parse_sexpr(sexpr);
  } catch (const DataError& e) {
    throw DataError(at + ": " + e.what());
  }
  std::size_t leaves = tree.leaf_tokens().size();
  if (leaves != want_leaves)
    throw DataError(at + ": gold tree has " + std::to_string(leaves) +
                    " leaves but the sentence has " +
                    std::to_string(want_leaves) + " tokens");
  BinaryTree bin = binarize(tree, right_binarize);
  if (second) {
    out.gold_actions2 = tree_to_actions(bin);
    out.gold_tree2 = std::move(tree);
  } else {
    out.gold_actions = tree_to_actions(bin);
    out.gold_tree = std::move(tree);
  }
}

}  // namespace detail

// Per-line problems (bad gold trees, leaf-count mismatches) are collected
// and reported together rather than stopping at the first offending line.
inline Dataset materialize(const std::vector<RawExample>& raw,
                           const Vocabulary& vocab, Task task,
                           const std::string& path,
                           bool right_binarize = false) {
  Dataset out;
  out.task = task;
  out.examples.reserve(raw.size());
  std::vector<std::string> errors;
  for (const auto& r : raw) {
    std::string at = path + ":" + std::to_string(r.lineno);
    Example ex;
    ex.lineno = r.lineno;
    ex.label = r.label;
    ex.score = r.score;
    for (const auto& t : r.tokens) ex.tokens.push_back(vocab.lookup(t));
    for (const auto& t : r.tokens2) ex.tokens2.push_back(vocab.lookup(t));
    try {
      if (!r.gold_sexpr.empty())
        detail::attach_parsed_gold(ex, r.gold_sexpr, r.tokens.size(),
                                   right_binarize, false, at);
      if (!r.gold_sexpr2.empty())
        detail::attach_parsed_gold(ex, r.gold_sexpr2, r.tokens2.size(),
                                   right_binarize, true, at);
    } catch (const DataError& e) {
      errors.emplace_back(e.what());
    }
    out.examples.push_back(std::move(ex));
  }
  if (!errors.empty()) {
    std::string msg = std::to_string(errors.size()) + " bad gold tree(s):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw DataError(msg);
  }
  return out;
}

// Plain tokenized sentences, one per line; empty lines are recorded so the
// caller can warn and skip.
struct SentenceFile {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::size_t> skipped_lines;
};

inline SentenceFile read_sentences(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read sentences: " + path);
  SentenceFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::vector<std::string> toks = split_tokens(line);
    if (toks.empty())
      out.skipped_lines.push_back(lineno);
    else
      out.sentences.push_back(std::move(toks));
  }
  return out;
}

}  // namespace treerl
