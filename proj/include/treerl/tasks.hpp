#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "treerl/autodiff.hpp"
#include "treerl/encoder.hpp"
#include "treerl/errors.hpp"

namespace treerl {

// Classifier over a sentence vector (or pair features): one ReLU projection
// then per-class linear scores.
struct ClassifierHead {
  std::size_t classes = 2;
  int Wp = -1, bp = -1;
  int Wq = -1, bq = -1;

  static ClassifierHead create(ParameterStore& ps, const std::string& prefix,
                               std::size_t in_dim, std::size_t hidden,
                               std::size_t classes, std::mt19937_64& rng) {
    ClassifierHead h;
    h.classes = classes;
    h.Wp = ps.add(prefix + "head.Wp", glorot_matrix(hidden, in_dim, rng));
    h.bp = ps.add(prefix + "head.bp", filled_vec(hidden, kReluBiasInit));
    h.Wq = ps.add(prefix + "head.Wq", glorot_matrix(classes, hidden, rng));
    h.bq = ps.add(prefix + "head.bq", Tensor::zeros({classes}));
    return h;
  }
};

struct RegressionHead {
  int Wp = -1, bp = -1;
  int wq = -1, bq = -1;

  static RegressionHead create(ParameterStore& ps, const std::string& prefix,
                               std::size_t in_dim, std::size_t hidden,
                               std::mt19937_64& rng) {
    RegressionHead h;
    h.Wp = ps.add(prefix + "head.Wp", glorot_matrix(hidden, in_dim, rng));
    h.bp = ps.add(prefix + "head.bp", filled_vec(hidden, kReluBiasInit));
    h.wq = ps.add(prefix + "head.wq", glorot_matrix(1, hidden, rng));
    h.bq = ps.add(prefix + "head.bq", Tensor::zeros({1}));
    return h;
  }
};

// Bag-of-words generator: one column per vocabulary word, one shared
// softmax.
struct BowDecoder {
  int V = -1;

  static BowDecoder create(ParameterStore& ps, const std::string& prefix,
                           std::size_t dim, std::size_t vocab,
                           std::mt19937_64& rng) {
    BowDecoder d;
    d.V = ps.add(prefix + "bow.V", glorot_matrix(dim, vocab, rng));
    return d;
  }
};

// q = ReLU(Wp s + bp), log-softmax over class scores.
inline int classify(Graph& g, const ClassifierHead& head, int sentence) {
  int q = g.relu(affine(g, head.Wp, sentence, head.bp));
  return g.log_softmax(affine(g, head.Wq, q, head.bq));
}

inline int classify_loss(Graph& g, const ClassifierHead& head, int sentence,
                         std::size_t label) {
  return g.nll_pick(classify(g, head, sentence), label);
}

// Pair features u = (s2 - s1)^2 and v = s1 * s2.
struct PairFeatures {
  int u = -1;
  int v = -1;
};

inline PairFeatures pair_features(Graph& g, int s1, int s2) {
  PairFeatures f;
  f.u = g.sqdiff(s2, s1);
  f.v = g.mul(s1, s2);
  return f;
}

// Relatedness regression: scalar prediction from [u, v].
inline int relate(Graph& g, const RegressionHead& head, int s1, int s2) {
  PairFeatures f = pair_features(g, s1, s2);
  int q = g.relu(affine(g, head.Wp, g.concat({f.u, f.v}), head.bp));
  return affine(g, head.wq, q, head.bq);
}

// Squared-error loss; the matching REINFORCE reward is its negation.
inline int relate_loss(Graph& g, const RegressionHead& head, int s1, int s2,
                       double target) {
  int yhat = relate(g, head, s1, s2);
  return g.sqdiff(yhat, g.constant(Tensor::scalar(target)));
}

// Three-way entailment over [u, v, s1, s2].
inline int entail(Graph& g, const ClassifierHead& head, int s1, int s2) {
  PairFeatures f = pair_features(g, s1, s2);
  int feats = g.concat({f.u, f.v, s1, s2});
  int q = g.relu(affine(g, head.Wp, feats, head.bp));
  return g.log_softmax(affine(g, head.Wq, q, head.bq));
}

inline int entail_loss(Graph& g, const ClassifierHead& head, int s1, int s2,
                       std::size_t label) {
  return g.nll_pick(entail(g, head, s1, s2), label);
}

// Total negative log-likelihood of the target bag of words under one shared
// softmax; repeated tokens contribute additively.
inline int bow_nll(Graph& g, const BowDecoder& dec, int sentence,
                   const std::vector<int>& target_tokens) {
  if (target_tokens.empty()) throw DataError("bow_nll: empty target sentence");
  int logits = g.matvec_t(g.param(dec.V), sentence);
  int logp = g.log_softmax(logits);
  std::vector<int> terms;
  terms.reserve(target_tokens.size());
  for (int tok : target_tokens)
    terms.push_back(g.nll_pick(logp, static_cast<std::size_t>(tok)));
  return terms.size() == 1 ? terms[0] : g.add(terms);
}

// Elementwise mean of two sentence encodings (the bidirectional baseline).
inline int bidirectional_mean(Graph& g, int h_l2r, int h_r2l) {
  return g.scale(g.add(h_l2r, h_r2l), 0.5);
}

}  // namespace treerl
