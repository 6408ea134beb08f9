#pragma once

#include <cassert>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "treerl/autodiff.hpp"
#include "treerl/errors.hpp"
#include "treerl/rng.hpp"
#include "treerl/tree.hpp"

namespace treerl {

struct EncoderDims {
  std::size_t dim = 100;       // stack element width D
  std::size_t emb_dim = 100;   // word embedding width
  std::size_t track_dim = 50;  // tracking LSTM hidden size
  bool tracking = false;
  // The composition cell emits h = o * c by default; the conventional
  // h = o * tanh(c) sits behind this flag.
  bool tanh_cell_output = false;
};

inline Tensor glorot_matrix(std::size_t rows, std::size_t cols,
                            std::mt19937_64& rng) {
  Tensor t = Tensor::zeros({rows, cols});
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& e : t.v) e = uniform(rng, -bound, bound);
  return t;
}

inline Tensor filled_vec(std::size_t n, double x) {
  Tensor t = Tensor::zeros({n});
  std::fill(t.v.begin(), t.v.end(), x);
  return t;
}

// ReLU layers start with a small positive bias so units begin active and
// pre-activations sit away from the kink.
inline constexpr double kReluBiasInit = 0.1;

// Affine leaf transform mapping a word embedding to the (h, c) pair that
// SHIFT pushes.
struct LeafParams {
  int Wh = -1, bh = -1, Wc = -1, bc = -1;

  static LeafParams create(ParameterStore& ps, const std::string& prefix,
                           const EncoderDims& d, std::mt19937_64& rng) {
    LeafParams p;
    p.Wh = ps.add(prefix + "leaf.Wh", glorot_matrix(d.dim, d.emb_dim, rng));
    p.bh = ps.add(prefix + "leaf.bh", Tensor::zeros({d.dim}));
    p.Wc = ps.add(prefix + "leaf.Wc", glorot_matrix(d.dim, d.emb_dim, rng));
    p.bc = ps.add(prefix + "leaf.bc", Tensor::zeros({d.dim}));
    return p;
  }
};

// The five-gate binary composition cell. Weight width follows the input:
// [h_left, h_right] without tracking, [h_left, h_right, e] with it.
struct TreeCellParams {
  int Wi = -1, bi = -1;
  int Wfl = -1, bfl = -1;
  int Wfr = -1, bfr = -1;
  int Wo = -1, bo = -1;
  int Wg = -1, bg = -1;

  static TreeCellParams create(ParameterStore& ps, const std::string& prefix,
                               const EncoderDims& d, std::mt19937_64& rng) {
    std::size_t in = 2 * d.dim + (d.tracking ? d.track_dim : 0);
    TreeCellParams p;
    p.Wi = ps.add(prefix + "cell.Wi", glorot_matrix(d.dim, in, rng));
    p.bi = ps.add(prefix + "cell.bi", Tensor::zeros({d.dim}));
    p.Wfl = ps.add(prefix + "cell.Wfl", glorot_matrix(d.dim, in, rng));
    p.bfl = ps.add(prefix + "cell.bfl", Tensor::zeros({d.dim}));
    p.Wfr = ps.add(prefix + "cell.Wfr", glorot_matrix(d.dim, in, rng));
    p.bfr = ps.add(prefix + "cell.bfr", Tensor::zeros({d.dim}));
    p.Wo = ps.add(prefix + "cell.Wo", glorot_matrix(d.dim, in, rng));
    p.bo = ps.add(prefix + "cell.bo", Tensor::zeros({d.dim}));
    p.Wg = ps.add(prefix + "cell.Wg", glorot_matrix(d.dim, in, rng));
    p.bg = ps.add(prefix + "cell.bg", Tensor::zeros({d.dim}));
    return p;
  }
};

// Standard LSTM over [h_left, h_right, x_p] with hidden size track_dim.
struct TrackingParams {
  int Wi = -1, bi = -1;
  int Wf = -1, bf = -1;
  int Wo = -1, bo = -1;
  int Wg = -1, bg = -1;

  static TrackingParams create(ParameterStore& ps, const std::string& prefix,
                               const EncoderDims& d, std::mt19937_64& rng) {
    std::size_t in = 2 * d.dim + d.emb_dim + d.track_dim;
    TrackingParams p;
    p.Wi = ps.add(prefix + "track.Wi", glorot_matrix(d.track_dim, in, rng));
    p.bi = ps.add(prefix + "track.bi", Tensor::zeros({d.track_dim}));
    p.Wf = ps.add(prefix + "track.Wf", glorot_matrix(d.track_dim, in, rng));
    p.bf = ps.add(prefix + "track.bf", Tensor::zeros({d.track_dim}));
    p.Wo = ps.add(prefix + "track.Wo", glorot_matrix(d.track_dim, in, rng));
    p.bo = ps.add(prefix + "track.bo", Tensor::zeros({d.track_dim}));
    p.Wg = ps.add(prefix + "track.Wg", glorot_matrix(d.track_dim, in, rng));
    p.bg = ps.add(prefix + "track.bg", Tensor::zeros({d.track_dim}));
    return p;
  }
};

struct EncoderParams {
  EncoderDims dims;
  LeafParams leaf;
  TreeCellParams cell;
  TrackingParams track;  // unused when dims.tracking is false

  static EncoderParams create(ParameterStore& ps, const std::string& prefix,
                              const EncoderDims& d, std::mt19937_64& rng) {
    EncoderParams p;
    p.dims = d;
    p.leaf = LeafParams::create(ps, prefix, d, rng);
    p.cell = TreeCellParams::create(ps, prefix, d, rng);
    if (d.tracking) p.track = TrackingParams::create(ps, prefix, d, rng);
    return p;
  }
};

// One stack entry: graph node ids of the hidden and memory vectors.
struct StackEntry {
  int h = -1;
  int c = -1;
};

// Shift-reduce parser state over a graph under construction. Embedding nodes
// for x_1..x_N are created once up front; the pointer is 1-based.
struct ParserState {
  std::vector<StackEntry> stack;
  std::size_t pointer = 1;
  ActionSequence history;
  int track_h = -1, track_c = -1;
  std::vector<int> word_nodes;

  std::size_t num_words() const { return word_nodes.size(); }
  bool buffer_empty() const { return pointer > num_words(); }
};

inline ParserState make_parser_state(Graph& g, const EncoderParams& enc,
                                     std::vector<int> word_nodes) {
  ParserState st;
  st.word_nodes = std::move(word_nodes);
  if (enc.dims.tracking) {
    st.track_h = g.zeros(enc.dims.track_dim);
    st.track_c = g.zeros(enc.dims.track_dim);
  }
  return st;
}

// [h_i, h_j, x_p]: hidden states of the two topmost stack entries (h_i is
// the deeper one) and the pointer word, with zero vectors where the stack or
// buffer runs short.
struct StateFeatures {
  int h_left = -1;
  int h_right = -1;
  int word = -1;
};

inline StateFeatures state_features(Graph& g, const EncoderParams& enc,
                                    const ParserState& st) {
  StateFeatures f;
  std::size_t n = st.stack.size();
  f.h_right = n >= 1 ? st.stack[n - 1].h : g.zeros(enc.dims.dim);
  f.h_left = n >= 2 ? st.stack[n - 2].h : g.zeros(enc.dims.dim);
  f.word = st.buffer_empty() ? g.zeros(enc.dims.emb_dim)
                             : st.word_nodes[st.pointer - 1];
  return f;
}

inline int affine(Graph& g, int W, int x, int b) {
  return g.add(g.matvec(g.param(W), x), g.param(b));
}

// The binary composition: four sigmoid gates and a tanh candidate over the
// concatenated child hidden states (plus the tracking output when enabled),
// then c = f_l*c_l + f_r*c_r + i*g and h = o*c (or o*tanh(c) via the flag).
inline StackEntry compose(Graph& g, const EncoderParams& enc, StackEntry left,
                          StackEntry right, std::optional<int> tracking_e) {
  if (enc.dims.tracking != tracking_e.has_value())
    throw ShapeError("compose: tracking input does not match configuration");
  std::vector<int> parts{left.h, right.h};
  if (tracking_e) parts.push_back(*tracking_e);
  int x = g.concat(parts);
  int i = g.sigmoid(affine(g, enc.cell.Wi, x, enc.cell.bi));
  int fl = g.sigmoid(affine(g, enc.cell.Wfl, x, enc.cell.bfl));
  int fr = g.sigmoid(affine(g, enc.cell.Wfr, x, enc.cell.bfr));
  int o = g.sigmoid(affine(g, enc.cell.Wo, x, enc.cell.bo));
  int cand = g.tanh(affine(g, enc.cell.Wg, x, enc.cell.bg));
  StackEntry out;
  out.c = g.add({g.mul(fl, left.c), g.mul(fr, right.c), g.mul(i, cand)});
  out.h = g.mul(o, enc.dims.tanh_cell_output ? g.tanh(out.c) : out.c);
  return out;
}

inline void shift(Graph& g, const EncoderParams& enc, ParserState& st) {
  if (st.buffer_empty())
    throw DataError("shift: no words left (pointer " +
                    std::to_string(st.pointer) + " of " +
                    std::to_string(st.num_words()) + ")");
  int x = st.word_nodes[st.pointer - 1];
  StackEntry e;
  e.h = affine(g, enc.leaf.Wh, x, enc.leaf.bh);
  e.c = affine(g, enc.leaf.Wc, x, enc.leaf.bc);
  st.stack.push_back(e);
  ++st.pointer;
  st.history.push_back(Action::Shift);
}

inline void reduce(Graph& g, const EncoderParams& enc, ParserState& st,
                   std::optional<int> tracking_e) {
  if (st.stack.size() < 2)
    throw DataError("reduce: stack holds " + std::to_string(st.stack.size()) +
                    " entries");
  StackEntry right = st.stack.back();
  st.stack.pop_back();
  StackEntry left = st.stack.back();
  st.stack.pop_back();
  st.stack.push_back(compose(g, enc, left, right, tracking_e));
  st.history.push_back(Action::Reduce);
}

// One step of the tracking LSTM over the current state features. Returns
// the output e fed to subsequent REDUCE compositions.
inline int tracking_step(Graph& g, const EncoderParams& enc, ParserState& st) {
  assert(enc.dims.tracking);
  StateFeatures f = state_features(g, enc, st);
  int z = g.concat({f.h_left, f.h_right, f.word, st.track_h});
  int i = g.sigmoid(affine(g, enc.track.Wi, z, enc.track.bi));
  int fg = g.sigmoid(affine(g, enc.track.Wf, z, enc.track.bf));
  int o = g.sigmoid(affine(g, enc.track.Wo, z, enc.track.bo));
  int cand = g.tanh(affine(g, enc.track.Wg, z, enc.track.bg));
  st.track_c = g.add(g.mul(fg, st.track_c), g.mul(i, cand));
  st.track_h = g.mul(o, g.tanh(st.track_c));
  return st.track_h;
}

struct EncodeResult {
  StackEntry sentence;  // final stack element
  BinaryTree tree;
  ActionSequence actions;
};

// Runs a full 2N-1 step parse with a given action sequence. The tracking
// LSTM (when enabled) steps once per timestep, before the action.
inline EncodeResult encode(Graph& g, const EncoderParams& enc,
                           const std::vector<int>& word_nodes,
                           const ActionSequence& actions) {
  std::size_t n = word_nodes.size();
  if (n == 0) throw DataError("encode: empty sentence");
  if (actions.size() != 2 * n - 1)
    throw DataError("encode: " + std::to_string(actions.size()) +
                    " actions for " + std::to_string(n) + " tokens");
  ParserState st = make_parser_state(g, enc, word_nodes);
  for (Action a : actions) {
    std::optional<int> e;
    if (enc.dims.tracking) e = tracking_step(g, enc, st);
    if (a == Action::Shift)
      shift(g, enc, st);
    else
      reduce(g, enc, st, e);
  }
  if (st.stack.size() != 1)
    throw DataError("encode: sequence leaves " +
                    std::to_string(st.stack.size()) + " stack entries");
  EncodeResult out;
  out.sentence = st.stack[0];
  out.actions = st.history;
  out.tree = actions_to_tree(st.history, static_cast<int>(n));
  return out;
}

}  // namespace treerl
