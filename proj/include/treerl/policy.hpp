#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "treerl/autodiff.hpp"
#include "treerl/encoder.hpp"
#include "treerl/errors.hpp"
#include "treerl/tree.hpp"

namespace treerl {

// Two-layer feedforward scorer over [h_i, h_j, x_p]. Action index 0 is
// SHIFT, 1 is REDUCE.
struct PolicyParams {
  std::size_t hidden = 64;
  int W1 = -1, b1 = -1;
  int W2 = -1, b2 = -1;

  static PolicyParams create(ParameterStore& ps, const std::string& prefix,
                             const EncoderDims& d, std::size_t hidden,
                             std::mt19937_64& rng) {
    PolicyParams p;
    p.hidden = hidden;
    std::size_t in = 2 * d.dim + d.emb_dim;
    p.W1 = ps.add(prefix + "policy.W1", glorot_matrix(hidden, in, rng));
    p.b1 = ps.add(prefix + "policy.b1", filled_vec(hidden, kReluBiasInit));
    p.W2 = ps.add(prefix + "policy.W2", glorot_matrix(2, hidden, rng));
    p.b2 = ps.add(prefix + "policy.b2", Tensor::zeros({2}));
    return p;
  }
};

// Masked action distribution. Illegal actions carry exactly zero mass; when
// both actions are legal the probabilities come from a log-softmax node so
// gradients can flow, otherwise no graph nodes are built.
struct ActionDist {
  double p_shift = 0.0;
  double p_reduce = 0.0;
  int logprob_node = -1;  // log-probability vector node, -1 when forced

  bool forced() const { return logprob_node < 0; }
};

inline ActionDist action_distribution(Graph& g, const EncoderParams& enc,
                                      const PolicyParams& pol,
                                      const ParserState& st) {
  bool can_shift = !st.buffer_empty();
  bool can_reduce = st.stack.size() >= 2;
  if (!can_shift && !can_reduce)
    throw ShapeError("action_distribution: no legal action");
  ActionDist dist;
  if (can_shift != can_reduce) {
    dist.p_shift = can_shift ? 1.0 : 0.0;
    dist.p_reduce = can_reduce ? 1.0 : 0.0;
    return dist;
  }
  StateFeatures f = state_features(g, enc, st);
  int feats = g.concat({f.h_left, f.h_right, f.word});
  int hidden = g.relu(affine(g, pol.W1, feats, pol.b1));
  int logits = affine(g, pol.W2, hidden, pol.b2);
  dist.logprob_node = g.log_softmax(logits);
  const Tensor& lp = g.value(dist.logprob_node);
  dist.p_shift = std::exp(lp.v[0]);
  dist.p_reduce = std::exp(lp.v[1]);
  return dist;
}

struct SampledAction {
  Action action = Action::Shift;
  double log_prob = 0.0;
};

inline SampledAction sample_action(const ActionDist& dist,
                                   std::mt19937_64& rng) {
  SampledAction out;
  if (dist.forced()) {
    out.action = dist.p_shift > 0.0 ? Action::Shift : Action::Reduce;
    out.log_prob = 0.0;
    return out;
  }
  double u = uniform(rng, 0.0, 1.0);
  out.action = u < dist.p_shift ? Action::Shift : Action::Reduce;
  out.log_prob =
      std::log(out.action == Action::Shift ? dist.p_shift : dist.p_reduce);
  return out;
}

// Argmax decode; ties go to SHIFT.
inline Action greedy_action(const ActionDist& dist) {
  return dist.p_shift >= dist.p_reduce ? Action::Shift : Action::Reduce;
}

struct TrajectoryStep {
  bool shift_legal = false;
  bool reduce_legal = false;
  Action action = Action::Shift;
  double log_prob = 0.0;  // of the chosen action under the masked policy
};

// Per-sentence record of the 2N-1 decisions plus the terminal reward, the
// unit REINFORCE consumes.
struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double reward = 0.0;

  double total_log_prob() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.log_prob;
    return s;
  }
};

enum class DecodeMode { Sample, Greedy };

// How the parser chooses actions: a fixed sequence (baselines, gold trees,
// teacher-forced scoring) or the policy (sampled or greedy).
struct ActionSource {
  const ActionSequence* forced = nullptr;
  const PolicyParams* policy = nullptr;
  DecodeMode mode = DecodeMode::Sample;
  std::mt19937_64* rng = nullptr;

  static ActionSource fixed(const ActionSequence& a) {
    ActionSource s;
    s.forced = &a;
    return s;
  }
  static ActionSource scored(const ActionSequence& a, const PolicyParams& p) {
    ActionSource s;
    s.forced = &a;
    s.policy = &p;
    return s;
  }
  static ActionSource sampled(const PolicyParams& p, std::mt19937_64& rng) {
    ActionSource s;
    s.policy = &p;
    s.mode = DecodeMode::Sample;
    s.rng = &rng;
    return s;
  }
  static ActionSource greedy(const PolicyParams& p) {
    ActionSource s;
    s.policy = &p;
    s.mode = DecodeMode::Greedy;
    return s;
  }
};

struct RolloutResult {
  StackEntry sentence;
  BinaryTree tree;
  ActionSequence actions;
  Trajectory trajectory;
  // nll nodes (-log pi of the chosen action) for every free decision, in
  // timestep order; empty when every step was forced by the legality mask.
  std::vector<int> policy_nll_nodes;
};

// The shared stack-machine driver. Runs 2N-1 timesteps; at each one the
// tracking LSTM (if enabled) steps first, then the action is picked from the
// source, constrained by the legality mask, and applied.
inline RolloutResult run_parser(Graph& g, const EncoderParams& enc,
                                const std::vector<int>& word_nodes,
                                const ActionSource& src) {
  std::size_t n = word_nodes.size();
  if (n == 0) throw DataError("run_parser: empty sentence");
  std::size_t steps = 2 * n - 1;
  if (src.forced && src.forced->size() != steps)
    throw DataError("run_parser: " + std::to_string(src.forced->size()) +
                    " actions for " + std::to_string(n) + " tokens");
  if (!src.forced && !src.policy)
    throw ShapeError("run_parser: no action source");
  if (!src.forced && src.mode == DecodeMode::Sample && !src.rng)
    throw ShapeError("run_parser: sampling requires an rng");

  RolloutResult out;
  ParserState st = make_parser_state(g, enc, word_nodes);
  for (std::size_t t = 0; t < steps; ++t) {
    std::optional<int> e;
    if (enc.dims.tracking) e = tracking_step(g, enc, st);

    bool can_shift = !st.buffer_empty();
    bool can_reduce = st.stack.size() >= 2;
    TrajectoryStep rec;
    rec.shift_legal = can_shift;
    rec.reduce_legal = can_reduce;

    Action a;
    if (can_shift && can_reduce) {
      if (src.policy) {
        ActionDist dist = action_distribution(g, enc, *src.policy, st);
        if (src.forced)
          a = (*src.forced)[t];
        else if (src.mode == DecodeMode::Sample)
          a = sample_action(dist, *src.rng).action;
        else
          a = greedy_action(dist);
        int nll =
            g.nll_pick(dist.logprob_node, a == Action::Shift ? 0u : 1u);
        out.policy_nll_nodes.push_back(nll);
        rec.log_prob = -g.scalar_value(nll);
      } else {
        a = (*src.forced)[t];
      }
    } else {
      a = can_shift ? Action::Shift : Action::Reduce;
      if (src.forced && (*src.forced)[t] != a)
        throw DataError("run_parser: illegal action at step " +
                        std::to_string(t) + " (" +
                        ((*src.forced)[t] == Action::Shift ? "shift with empty buffer"
                                                           : "reduce on short stack") +
                        ")");
      rec.log_prob = 0.0;
    }

    rec.action = a;
    out.trajectory.steps.push_back(rec);
    if (a == Action::Shift)
      shift(g, enc, st);
    else
      reduce(g, enc, st, e);
  }
  assert(st.stack.size() == 1);
  out.sentence = st.stack[0];
  out.actions = st.history;
  out.tree = actions_to_tree(st.history, static_cast<int>(n));
  return out;
}

}  // namespace treerl
