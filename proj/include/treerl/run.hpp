#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treerl/checkpoint.hpp"
#include "treerl/data.hpp"
#include "treerl/evaluation.hpp"
#include "treerl/model.hpp"
#include "treerl/rng.hpp"
#include "treerl/training.hpp"

namespace treerl {

// Full description of one CLI invocation. Every run is a pure function of
// (input files, this config, seed); nothing is seeded from the clock.
struct RunConfig {
  std::string command;  // train | eval | induce
  ModelConfig model;
  TrainConfig train;
  std::string tracking_mode = "auto";  // auto | on | off
  bool right_binarize = false;
  bool timing = false;  // real wall time in the metrics log (off keeps the
                        // log byte-reproducible)
  std::string train_path, dev_path, test_path;
  std::string embeddings_path;
  std::string gold_trees_path, gold_trees_dev_path;
  std::string checkpoint_path;
  std::string out_dir;
};

inline void resolve_tracking(RunConfig& cfg) {
  if (cfg.tracking_mode == "on")
    cfg.model.tracking = true;
  else if (cfg.tracking_mode == "off")
    cfg.model.tracking = false;
  else if (cfg.tracking_mode == "auto")
    cfg.model.tracking = cfg.model.task == Task::Entailment;
  else
    throw DataError("bad --tracking value: " + cfg.tracking_mode +
                    " (want auto, on, or off)");
}

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline void require_path(const std::string& p, const std::string& flag) {
  if (p.empty()) throw DataError("missing required " + flag);
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw DataError("cannot write: " + p.string());
  return os;
}

inline Dataset load_split(const RunConfig& cfg, const std::string& path,
                          const std::string& gold_path,
                          const Vocabulary& vocab) {
  std::vector<RawExample> raw = read_corpus(path, cfg.model.task);
  if (!gold_path.empty()) attach_gold_trees(raw, gold_path, cfg.model.task);
  return materialize(raw, vocab, cfg.model.task, path, cfg.right_binarize);
}

inline void write_config_echo(const std::filesystem::path& p,
                              const RunConfig& cfg) {
  std::ofstream os = open_out(p);
  os << "--task " << task_name(cfg.model.task) << "\n";
  os << "--regime " << regime_name(cfg.model.regime) << "\n";
  if (!cfg.train_path.empty()) os << "--train " << cfg.train_path << "\n";
  if (!cfg.dev_path.empty()) os << "--dev " << cfg.dev_path << "\n";
  if (!cfg.test_path.empty()) os << "--test " << cfg.test_path << "\n";
  if (!cfg.embeddings_path.empty())
    os << "--embeddings " << cfg.embeddings_path << "\n";
  if (!cfg.gold_trees_path.empty())
    os << "--gold-trees " << cfg.gold_trees_path << "\n";
  if (!cfg.gold_trees_dev_path.empty())
    os << "--gold-trees-dev " << cfg.gold_trees_dev_path << "\n";
  if (!cfg.checkpoint_path.empty())
    os << "--checkpoint " << cfg.checkpoint_path << "\n";
  if (!cfg.out_dir.empty()) os << "--out " << cfg.out_dir << "\n";
  os << "--dim " << cfg.model.dim << "\n";
  os << "--emb-dim " << cfg.model.emb_dim << "\n";
  os << "--track-dim " << cfg.model.track_dim << "\n";
  os << "--tracking " << (cfg.model.tracking ? "on" : "off") << "\n";
  os << "--policy-hidden " << cfg.model.policy_hidden << "\n";
  os << "--head-hidden " << cfg.model.head_hidden << "\n";
  if (cfg.model.tanh_cell_output) os << "--tanh-cell-output\n";
  if (cfg.right_binarize) os << "--binarize right\n";
  os << "--lr " << fmt_double(cfg.train.lr) << "\n";
  os << "--l2 " << fmt_double(cfg.train.l2) << "\n";
  os << "--epochs " << cfg.train.max_epochs << "\n";
  os << "--sup-epochs " << cfg.train.sup_epochs << "\n";
  os << "--patience " << cfg.train.patience << "\n";
  os << "--restarts " << cfg.train.restarts << "\n";
  if (cfg.train.baseline) os << "--baseline\n";
  os << "--decode "
     << (cfg.train.decode == DecodeMode::Greedy ? "greedy" : "sample") << "\n";
  if (cfg.timing) os << "--timing\n";
  os << "--seed " << cfg.train.seed << "\n";
}

inline void write_metrics_log(const std::filesystem::path& p,
                              const std::vector<EpochRecord>& log,
                              bool timing) {
  std::ofstream os = open_out(p);
  for (const auto& r : log) {
    os << r.epoch << '\t' << fmt_double(r.train_objective) << '\t'
       << fmt_double(r.dev_metric) << '\t'
       << (timing ? fmt_double(r.wall_seconds) : std::string("0")) << '\t'
       << r.skips << '\n';
  }
}

}  // namespace detail

struct TrainRunResult {
  TrainResult result;
  std::filesystem::path checkpoint, metrics, config_echo;
};

// train: fit on --train, select by --dev, write best checkpoint + per-epoch
// metrics log + a config echo that reproduces the run.
inline TrainRunResult cmd_train(const RunConfig& cfg) {
  detail::require_path(cfg.train_path, "--train");
  detail::require_path(cfg.dev_path, "--dev");
  detail::require_path(cfg.out_dir, "--out");
  std::filesystem::create_directories(cfg.out_dir);

  std::vector<RawExample> train_raw =
      read_corpus(cfg.train_path, cfg.model.task);
  if (train_raw.empty()) throw DataError("empty train corpus: " + cfg.train_path);
  if (!cfg.gold_trees_path.empty())
    attach_gold_trees(train_raw, cfg.gold_trees_path, cfg.model.task);
  Vocabulary vocab = build_vocabulary(train_raw);
  Dataset train_set = materialize(train_raw, vocab, cfg.model.task,
                                  cfg.train_path, cfg.right_binarize);
  Dataset dev_set =
      detail::load_split(cfg, cfg.dev_path, cfg.gold_trees_dev_path, vocab);

  std::unordered_map<std::string, std::vector<double>> pretrained;
  if (!cfg.embeddings_path.empty())
    pretrained = load_embedding_file(cfg.embeddings_path, cfg.model.emb_dim);

  TrainConfig tc = cfg.train;
  tc.task = cfg.model.task;
  tc.regime = cfg.model.regime;
  if (tc.sup_epochs < 0)
    tc.sup_epochs = cfg.model.regime == Regime::SemiSupervised
                        ? (train_set.size() <= 10000 ? 5 : 1)
                        : 0;

  bool higher = metric_higher_better(tc.task);
  std::optional<Model> best_model;
  TrainResult best_result;
  for (int r = 0; r < std::max(1, tc.restarts); ++r) {
    RngStreams streams(split_seed(tc.seed, static_cast<std::uint64_t>(r)));
    Model m = Model::build(cfg.model, vocab, pretrained, streams.init);
    TrainResult res = train(m, train_set, dev_set, tc, streams);
    bool take = !best_model ||
                (higher ? res.best_dev > best_result.best_dev
                        : res.best_dev < best_result.best_dev);
    if (tc.restarts > 1)
      std::cerr << "restart " << r << ": best dev " << res.best_dev
                << " at epoch " << res.best_epoch << "\n";
    if (take) {
      best_model = std::move(m);
      best_result = std::move(res);
    }
  }

  TrainRunResult out;
  out.result = std::move(best_result);
  std::filesystem::path dir(cfg.out_dir);
  out.checkpoint = dir / "model.ckpt";
  out.metrics = dir / "metrics.tsv";
  out.config_echo = dir / "config.txt";
  save_checkpoint(out.checkpoint.string(), best_model->params,
                  model_metadata(*best_model));
  detail::write_metrics_log(out.metrics, out.result.log, cfg.timing);
  detail::write_config_echo(out.config_echo, cfg);
  std::cout << "best dev " << out.result.best_dev << " at epoch "
            << out.result.best_epoch << " (" << out.result.log.size()
            << " epochs run)\n";
  return out;
}

struct EvalRunResult {
  MetricReport metric;
  std::optional<F1Report> f1;
  std::optional<BranchingStats> branching;
  std::filesystem::path report;
};

// eval: task metric on --test (or --dev), plus bracketing F1 when gold trees
// are available, plus branching statistics of the produced structures.
inline EvalRunResult cmd_eval(const RunConfig& cfg) {
  detail::require_path(cfg.checkpoint_path, "--checkpoint");
  detail::require_path(cfg.out_dir, "--out");
  const std::string& split =
      !cfg.test_path.empty() ? cfg.test_path : cfg.dev_path;
  if (split.empty()) throw DataError("eval needs --test or --dev");
  std::filesystem::create_directories(cfg.out_dir);

  Checkpoint ck = read_checkpoint(cfg.checkpoint_path);
  Model m = model_from_checkpoint(ck, cfg.model);
  Dataset data = detail::load_split(cfg, split, cfg.gold_trees_path, m.vocab);
  if (data.empty()) throw DataError("empty eval corpus: " + split);

  std::mt19937_64 decode_rng(split_seed(cfg.train.seed, 3));
  EvalOutcome ev = evaluate(m, data, cfg.train.decode,
                            cfg.train.decode == DecodeMode::Sample
                                ? &decode_rng
                                : nullptr);

  EvalRunResult out;
  out.metric = ev.metric;
  out.branching = branching_stats(ev.trees);

  // bracketing F1 against gold when every example carries a reference tree
  bool pair = pair_task(m.cfg.task);
  bool all_gold = true;
  for (const Example& ex : data.examples) {
    if (!ex.gold_tree || (pair && !ex.gold_tree2)) {
      all_gold = false;
      break;
    }
  }
  if (all_gold) {
    std::vector<TreeSpans> pred, ref;
    std::size_t ti = 0;
    for (const Example& ex : data.examples) {
      pred.push_back(TreeSpans::of(ev.trees[ti++]));
      ref.push_back(TreeSpans::of(*ex.gold_tree));
      if (pair) {
        pred.push_back(TreeSpans::of(ev.trees[ti++]));
        ref.push_back(TreeSpans::of(*ex.gold_tree2));
      }
    }
    out.f1 = bracketing_f1(pred, ref);
  }

  out.report = std::filesystem::path(cfg.out_dir) / "eval.tsv";
  std::ofstream os = detail::open_out(out.report);
  auto row = [&](const std::string& name, double value, std::size_t count) {
    os << name << '\t' << fmt_double(value) << '\t' << count << '\n';
    std::printf("%-24s %12.6f  (n=%zu)\n", name.c_str(), value, count);
  };
  row(out.metric.name, out.metric.value, out.metric.count);
  if (out.f1) {
    row("bracketing_precision", out.f1->precision, out.f1->count);
    row("bracketing_recall", out.f1->recall, out.f1->count);
    row("bracketing_f1", out.f1->f1, out.f1->count);
  }
  row("f1_vs_left_branching", out.branching->f1_vs_left, out.branching->count);
  row("f1_vs_right_branching", out.branching->f1_vs_right,
      out.branching->count);
  row("left_heavy_fraction", out.branching->left_heavy_fraction,
      out.branching->count);
  return out;
}

struct InduceRunResult {
  std::filesystem::path trees;
  std::size_t written = 0;
  std::size_t skipped = 0;
};

// induce: one s-expression per non-empty input sentence, decoded from the
// checkpoint's policy.
inline InduceRunResult cmd_induce(const RunConfig& cfg) {
  detail::require_path(cfg.checkpoint_path, "--checkpoint");
  detail::require_path(cfg.test_path, "--test");
  detail::require_path(cfg.out_dir, "--out");
  std::filesystem::create_directories(cfg.out_dir);

  Checkpoint ck = read_checkpoint(cfg.checkpoint_path);
  Model m = model_from_checkpoint(ck, cfg.model);
  if (!m.policy)
    throw DataError("checkpoint has no policy parameters (regime " +
                    std::string(regime_name(m.cfg.regime)) +
                    "); induce needs a semi-supervised or latent model");

  SentenceFile input = read_sentences(cfg.test_path);
  for (std::size_t line : input.skipped_lines)
    std::cerr << "warning: skipping empty sentence at " << cfg.test_path << ":"
              << line << "\n";

  InduceRunResult out;
  out.trees = std::filesystem::path(cfg.out_dir) / "induced.txt";
  std::ofstream os = detail::open_out(out.trees);
  std::mt19937_64 decode_rng(split_seed(cfg.train.seed, 3));
  for (const auto& toks : input.sentences) {
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(m.vocab.lookup(t));
    Graph g(&m.params);
    std::vector<int> words = m.embed(g, ids);
    RolloutResult r = run_parser(
        g, m.enc, words,
        cfg.train.decode == DecodeMode::Greedy
            ? ActionSource::greedy(*m.policy)
            : ActionSource::sampled(*m.policy, decode_rng));
    os << to_sexpr(r.tree, toks) << '\n';
    ++out.written;
  }
  out.skipped = input.skipped_lines.size();
  return out;
}

}  // namespace treerl
