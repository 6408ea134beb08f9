#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treerl/errors.hpp"
#include "treerl/rng.hpp"
#include "treerl/tensor.hpp"

namespace treerl {

inline const std::string kUnkToken = "<unk>";

// Token ids in insertion order; id 0 is the unknown-word token. Unknown
// lookups map to it, so test-time words outside the training vocabulary
// share one trained embedding row.
struct Vocabulary {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;

  Vocabulary() { add(kUnkToken); }

  int add(const std::string& tok) {
    auto it = index.find(tok);
    if (it != index.end()) return it->second;
    tokens.push_back(tok);
    index[tok] = static_cast<int>(tokens.size()) - 1;
    return static_cast<int>(tokens.size()) - 1;
  }

  int lookup(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? 0 : it->second;
  }

  int size() const { return static_cast<int>(tokens.size()); }

  std::string serialize() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += '\n';
      out += tokens[i];
    }
    return out;
  }

  static Vocabulary deserialize(const std::string& blob) {
    Vocabulary v;
    v.tokens.clear();
    v.index.clear();
    std::istringstream is(blob);
    std::string line;
    while (std::getline(is, line)) v.add(line);
    if (v.size() == 0 || v.tokens[0] != kUnkToken)
      throw DataError("vocabulary blob does not start with " + kUnkToken);
    return v;
  }
};

// Text embedding file: one token per line, token then dim reals,
// whitespace-separated.
inline std::unordered_map<std::string, std::vector<double>>
load_embedding_file(const std::string& path, std::size_t dim) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read embeddings: " + path);
  std::unordered_map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    std::vector<double> vec;
    vec.reserve(dim);
    double x;
    while (ls >> x) vec.push_back(x);
    if (vec.size() != dim)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(dim) + " values, got " +
                      std::to_string(vec.size()));
    for (double e : vec)
      if (!std::isfinite(e))
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": non-finite embedding value");
    out[tok] = std::move(vec);
  }
  return out;
}

struct EmbeddingInit {
  Tensor table;                  // vocab size x dim
  std::vector<bool> pretrained;  // per vocabulary entry
};

// Rows come from the pretrained file when present, otherwise
// uniform(-0.05, 0.05).
inline EmbeddingInit init_embeddings(
    const Vocabulary& vocab, std::size_t dim,
    const std::unordered_map<std::string, std::vector<double>>& pretrained,
    std::mt19937_64& rng) {
  EmbeddingInit out;
  out.table = Tensor::zeros({static_cast<std::size_t>(vocab.size()), dim});
  out.pretrained.assign(static_cast<std::size_t>(vocab.size()), false);
  for (int i = 0; i < vocab.size(); ++i) {
    auto it = pretrained.find(vocab.tokens[static_cast<std::size_t>(i)]);
    if (it != pretrained.end()) {
      for (std::size_t j = 0; j < dim; ++j)
        out.table.at(static_cast<std::size_t>(i), j) = it->second[j];
      out.pretrained[static_cast<std::size_t>(i)] = true;
    } else {
      for (std::size_t j = 0; j < dim; ++j)
        out.table.at(static_cast<std::size_t>(i), j) =
            uniform(rng, -0.05, 0.05);
    }
  }
  return out;
}

}  // namespace treerl
