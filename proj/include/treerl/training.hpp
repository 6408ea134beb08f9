#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "treerl/autodiff.hpp"
#include "treerl/data.hpp"
#include "treerl/encoder.hpp"
#include "treerl/errors.hpp"
#include "treerl/evaluation.hpp"
#include "treerl/model.hpp"
#include "treerl/policy.hpp"
#include "treerl/rng.hpp"
#include "treerl/tasks.hpp"
#include "treerl/tree.hpp"

namespace treerl {

struct TrainConfig {
  Task task = Task::Sentiment;
  Regime regime = Regime::FixedLeft;
  double lr = 0.01;
  double l2 = 0.0;
  int sup_epochs = 0;  // E, meaningful for the semi-supervised regime only
  int max_epochs = 20;
  int patience = 10;
  std::uint64_t seed = 0;
  bool baseline = false;
  double baseline_decay = 0.9;
  DecodeMode decode = DecodeMode::Greedy;  // test-time structure decoding
  int restarts = 1;
  int max_consecutive_skips = 100;
  bool lr_halving = true;
};

// Running reward mean for variance reduction; off by default to match plain
// episodic REINFORCE.
struct BaselineState {
  bool enabled = false;
  double decay = 0.9;
  double mean = 0.0;

  // Centers with the current mean, then folds the new reward in.
  double center(double reward) {
    double b = enabled ? mean : 0.0;
    if (enabled) mean = decay * mean + (1.0 - decay) * reward;
    return reward - b;
  }
};

// Appends the REINFORCE surrogate for one episode: (r - b) * sum_t
// -log pi(a_t | s_t). Minimizing it ascends reward * log-probability.
// Returns -1 when every step was forced (nothing to credit).
inline int reinforce_term(Graph& g, const std::vector<int>& nll_nodes,
                          double reward, BaselineState& baseline) {
  double centered = baseline.center(reward);
  if (nll_nodes.empty()) return -1;
  int total = nll_nodes.size() == 1 ? nll_nodes[0] : g.add(nll_nodes);
  return g.scale(total, centered);
}

namespace detail {

struct SentenceRun {
  int h = -1;
  BinaryTree tree;
  Trajectory trajectory;
  std::vector<int> nll_nodes;
};

// Encodes one sentence under the regime's structure source. `sample` is true
// during training (the policy regimes roll out); evaluation passes false and
// the decode mode instead.
inline SentenceRun encode_sentence(Graph& g, const Model& m,
                                   const std::vector<int>& tokens,
                                   const std::optional<ActionSequence>& gold,
                                   Regime regime, int epoch, int sup_epochs,
                                   bool sample, DecodeMode decode,
                                   std::mt19937_64* rng) {
  std::vector<int> words = m.embed(g, tokens);
  int n = static_cast<int>(tokens.size());
  SentenceRun out;
  auto run_fixed = [&](const ActionSequence& a) {
    RolloutResult r = run_parser(g, m.enc, words, ActionSource::fixed(a));
    out.h = r.sentence.h;
    out.tree = std::move(r.tree);
    out.trajectory = std::move(r.trajectory);
  };
  switch (regime) {
    case Regime::FixedLeft:
      run_fixed(fixed_order_actions(CompositionOrder::LeftToRight, n));
      break;
    case Regime::FixedRight:
      run_fixed(fixed_order_actions(CompositionOrder::RightToLeft, n));
      break;
    case Regime::Bidirectional: {
      RolloutResult l = run_parser(
          g, m.enc, words,
          ActionSource::fixed(
              fixed_order_actions(CompositionOrder::LeftToRight, n)));
      RolloutResult r = run_parser(
          g, *m.enc_r2l, words,
          ActionSource::fixed(
              fixed_order_actions(CompositionOrder::RightToLeft, n)));
      out.h = bidirectional_mean(g, l.sentence.h, r.sentence.h);
      out.tree = std::move(l.tree);
      out.trajectory = std::move(l.trajectory);
      break;
    }
    case Regime::Supervised: {
      if (!gold)
        throw DataError("supervised regime needs a gold tree for every "
                        "sentence");
      run_fixed(*gold);
      break;
    }
    case Regime::SemiSupervised:
    case Regime::Latent: {
      bool supervised_phase =
          regime == Regime::SemiSupervised && epoch <= sup_epochs && sample;
      RolloutResult r;
      if (supervised_phase) {
        if (!gold)
          throw DataError(
              "semi-supervised regime needs a gold tree during the "
              "supervised phase");
        r = run_parser(g, m.enc, words,
                       ActionSource::scored(*gold, *m.policy));
      } else if (sample) {
        r = run_parser(g, m.enc, words,
                       ActionSource::sampled(*m.policy, *rng));
      } else if (decode == DecodeMode::Greedy) {
        r = run_parser(g, m.enc, words, ActionSource::greedy(*m.policy));
      } else {
        r = run_parser(g, m.enc, words,
                       ActionSource::sampled(*m.policy, *rng));
      }
      out.h = r.sentence.h;
      out.tree = std::move(r.tree);
      out.trajectory = std::move(r.trajectory);
      out.nll_nodes = std::move(r.policy_nll_nodes);
      break;
    }
  }
  return out;
}

inline int downstream_loss(Graph& g, const Model& m, const Example& ex,
                           int h1, int h2) {
  switch (m.cfg.task) {
    case Task::Sentiment:
      return classify_loss(g, *m.cls, h1,
                           static_cast<std::size_t>(ex.label));
    case Task::Entailment:
      return entail_loss(g, *m.cls, h1, h2,
                         static_cast<std::size_t>(ex.label));
    case Task::Relatedness:
      return relate_loss(g, *m.reg, h1, h2, ex.score);
    case Task::Generation:
      return bow_nll(g, *m.bow, h1, ex.tokens2);
  }
  throw ShapeError("downstream_loss: bad task");
}

}  // namespace detail

struct EpisodeOutcome {
  int loss_node = -1;
  double loss = 0.0;        // value of the full objective
  double downstream = 0.0;  // task term alone
  double reward = 0.0;      // -downstream for every task's reward definition
  bool policy_used = false;
  std::vector<Trajectory> trajectories;  // one per encoded sentence
  std::vector<BinaryTree> trees;
};

// Builds the per-example objective graph for the configured regime:
// downstream task loss, plus the gold-action cross-entropy during the
// semi-supervised phase, plus the REINFORCE surrogate in the latent phase.
// `freeze_policy` keeps the rollout but drops the structure term, leaving
// only downstream gradients.
inline EpisodeOutcome episode_loss(Graph& g, const Model& m, const Example& ex,
                                   const TrainConfig& cfg, int epoch,
                                   std::mt19937_64& policy_rng,
                                   BaselineState& baseline,
                                   bool freeze_policy = false) {
  if (m.cfg.task != cfg.task || m.cfg.regime != cfg.regime)
    throw ShapeError("episode_loss: model and config disagree on task/regime");
  bool pair = pair_task(cfg.task);
  detail::SentenceRun s1 = detail::encode_sentence(
      g, m, ex.tokens, ex.gold_actions, cfg.regime, epoch, cfg.sup_epochs,
      /*sample=*/true, cfg.decode, &policy_rng);
  detail::SentenceRun s2;
  if (pair)
    s2 = detail::encode_sentence(g, m, ex.tokens2, ex.gold_actions2,
                                 cfg.regime, epoch, cfg.sup_epochs,
                                 /*sample=*/true, cfg.decode, &policy_rng);

  EpisodeOutcome out;
  int loss = detail::downstream_loss(g, m, ex, s1.h, pair ? s2.h : -1);
  out.downstream = g.scalar_value(loss);
  out.reward = -out.downstream;
  out.trajectories.push_back(s1.trajectory);
  out.trees.push_back(s1.tree);
  if (pair) {
    out.trajectories.push_back(s2.trajectory);
    out.trees.push_back(s2.tree);
  }
  for (auto& t : out.trajectories) t.reward = out.reward;

  std::vector<int> nll_nodes = s1.nll_nodes;
  nll_nodes.insert(nll_nodes.end(), s2.nll_nodes.begin(), s2.nll_nodes.end());
  bool supervised_phase =
      cfg.regime == Regime::SemiSupervised && epoch <= cfg.sup_epochs;
  if (regime_uses_policy(cfg.regime) && !freeze_policy) {
    if (supervised_phase) {
      // gold-action cross-entropy, weighted 1:1 with the task term
      if (!nll_nodes.empty()) {
        out.policy_used = true;
        loss = g.add(loss, nll_nodes.size() == 1 ? nll_nodes[0]
                                                 : g.add(nll_nodes));
      }
    } else {
      int pg = reinforce_term(g, nll_nodes, out.reward, baseline);
      if (pg >= 0) {
        out.policy_used = true;
        loss = g.add(loss, pg);
      }
    }
  }
  out.loss_node = loss;
  out.loss = g.scalar_value(loss);
  return out;
}

// One SGD update with L2 weight decay folded into the gradient:
// theta <- theta - lr * (grad + l2 * theta). Gradient accumulators are
// zeroed afterwards. Returns false (skipping the update, still zeroing)
// when any accumulated gradient is non-finite.
inline bool sgd_step(ParameterStore& params, double lr, double l2) {
  if (!params.grads_finite()) {
    params.zero_grad();
    return false;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& e = params.at(static_cast<int>(i));
    for (std::size_t k = 0; k < e.value.size(); ++k) {
      e.value.v[k] -= lr * (e.grad.v[k] + l2 * e.value.v[k]);
      e.grad.v[k] = 0.0;
    }
  }
  return true;
}

struct EvalOutcome {
  MetricReport metric;
  std::vector<BinaryTree> trees;   // per encoded sentence (pairs interleave)
  std::vector<int> predicted_labels;
  std::vector<double> predicted_scores;
};

// Deterministic evaluation pass: greedy decoding for policy regimes unless
// sampled decoding is requested, fixed orders otherwise. Parameters are
// read-only.
inline EvalOutcome evaluate(const Model& m, const Dataset& data,
                            DecodeMode decode = DecodeMode::Greedy,
                            std::mt19937_64* rng = nullptr) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  if (data.task != m.cfg.task)
    throw DataError("evaluate: dataset task does not match the model");
  if (decode == DecodeMode::Sample && rng == nullptr)
    throw ShapeError("evaluate: sampled decoding requires an rng");
  EvalOutcome out;
  bool pair = pair_task(m.cfg.task);
  std::vector<int> gold_labels;
  std::vector<double> gold_scores;
  double total_nll = 0.0;
  std::size_t total_tokens = 0;
  for (const Example& ex : data.examples) {
    Graph g(const_cast<ParameterStore*>(&m.params));
    detail::SentenceRun s1 = detail::encode_sentence(
        g, m, ex.tokens, ex.gold_actions, m.cfg.regime, /*epoch=*/0,
        /*sup_epochs=*/0, /*sample=*/false, decode, rng);
    out.trees.push_back(s1.tree);
    detail::SentenceRun s2;
    if (pair) {
      s2 = detail::encode_sentence(g, m, ex.tokens2, ex.gold_actions2,
                                   m.cfg.regime, 0, 0, false, decode, rng);
      out.trees.push_back(s2.tree);
    }
    switch (m.cfg.task) {
      case Task::Sentiment: {
        const Tensor& lp = g.value(classify(g, *m.cls, s1.h));
        out.predicted_labels.push_back(
            static_cast<int>(std::max_element(lp.v.begin(), lp.v.end()) -
                             lp.v.begin()));
        gold_labels.push_back(ex.label);
        break;
      }
      case Task::Entailment: {
        const Tensor& lp = g.value(entail(g, *m.cls, s1.h, s2.h));
        out.predicted_labels.push_back(
            static_cast<int>(std::max_element(lp.v.begin(), lp.v.end()) -
                             lp.v.begin()));
        gold_labels.push_back(ex.label);
        break;
      }
      case Task::Relatedness: {
        double yhat = g.scalar_value(relate(g, *m.reg, s1.h, s2.h));
        out.predicted_scores.push_back(yhat);
        gold_scores.push_back(ex.score);
        break;
      }
      case Task::Generation: {
        total_nll += g.scalar_value(bow_nll(g, *m.bow, s1.h, ex.tokens2));
        total_tokens += ex.tokens2.size();
        break;
      }
    }
  }
  switch (m.cfg.task) {
    case Task::Sentiment:
    case Task::Entailment:
      out.metric = accuracy(out.predicted_labels, gold_labels);
      break;
    case Task::Relatedness:
      out.metric = mse(out.predicted_scores, gold_scores);
      break;
    case Task::Generation:
      out.metric = perplexity(total_nll, total_tokens);
      break;
  }
  return out;
}

inline bool metric_higher_better(Task task) {
  return task == Task::Sentiment || task == Task::Entailment;
}

struct EpochRecord {
  int epoch = 0;
  double train_objective = 0.0;
  double dev_metric = 0.0;
  double wall_seconds = 0.0;
  int skips = 0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  double best_dev = 0.0;
  int best_epoch = -1;
  int total_skips = 0;
};

using EpochHook = std::function<void(int epoch, const Model&)>;

namespace detail {

inline std::vector<Tensor> snapshot_values(const ParameterStore& ps) {
  std::vector<Tensor> out;
  out.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i)
    out.push_back(ps.at(static_cast<int>(i)).value);
  return out;
}

inline void restore_values(ParameterStore& ps, const std::vector<Tensor>& v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    ps.at(static_cast<int>(i)).value = v[i];
}

}  // namespace detail

// Single-run training loop: batch-size-1 SGD with per-epoch seeded
// shuffling, dev evaluation after every epoch, argmax-dev snapshotting,
// learning-rate halving after two stale epochs, and early stopping on
// patience. The model ends up holding the best-dev parameters.
inline TrainResult train(Model& m, const Dataset& train_set,
                         const Dataset& dev_set, const TrainConfig& cfg,
                         RngStreams& streams, const EpochHook& hook = {}) {
  if (train_set.empty() || dev_set.empty())
    throw DataError("train: empty train or dev split");
  if (train_set.task != cfg.task || dev_set.task != cfg.task)
    throw DataError("train: dataset task does not match the config");
  if (cfg.sup_epochs < 0) throw ShapeError("train: sup_epochs must be >= 0");

  TrainResult result;
  BaselineState baseline;
  baseline.enabled = cfg.baseline;
  baseline.decay = cfg.baseline_decay;
  double lr = cfg.lr;
  bool higher = metric_higher_better(cfg.task);
  std::vector<Tensor> best;
  int stale = 0, stale_lr = 0, consecutive_skips = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), streams.shuffle);
    double objective_sum = 0.0;
    std::size_t counted = 0;
    int skips = 0;
    for (std::size_t idx : order) {
      const Example& ex = train_set.examples[idx];
      Graph g(&m.params);
      EpisodeOutcome out =
          episode_loss(g, m, ex, cfg, epoch, streams.policy, baseline);
      bool ok = std::isfinite(out.loss);
      if (ok) {
        g.backward(out.loss_node);
        ok = sgd_step(m.params, lr, cfg.l2);
        if (ok) {
          objective_sum += out.loss;
          ++counted;
        }
      } else {
        m.params.zero_grad();
      }
      if (ok) {
        consecutive_skips = 0;
      } else {
        ++skips;
        ++result.total_skips;
        if (++consecutive_skips > cfg.max_consecutive_skips)
          throw NumericError("train: " + std::to_string(consecutive_skips) +
                             " consecutive non-finite updates");
      }
    }

    EvalOutcome dev = evaluate(m, dev_set, DecodeMode::Greedy);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_objective = counted ? objective_sum / counted : 0.0;
    rec.dev_metric = dev.metric.value;
    rec.skips = skips;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.log.push_back(rec);

    bool improved = result.best_epoch < 0 ||
                    (higher ? rec.dev_metric > result.best_dev
                            : rec.dev_metric < result.best_dev);
    if (improved) {
      result.best_dev = rec.dev_metric;
      result.best_epoch = epoch;
      best = detail::snapshot_values(m.params);
      stale = 0;
      stale_lr = 0;
    } else {
      ++stale;
      ++stale_lr;
      if (cfg.lr_halving && stale_lr >= 2) {
        lr *= 0.5;
        stale_lr = 0;
      }
    }
    if (hook) hook(epoch, m);
    if (stale >= cfg.patience) break;
  }

  if (!best.empty()) detail::restore_values(m.params, best);
  return result;
}

}  // namespace treerl
