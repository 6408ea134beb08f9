#pragma once

#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treerl/autodiff.hpp"
#include "treerl/checkpoint.hpp"
#include "treerl/encoder.hpp"
#include "treerl/errors.hpp"
#include "treerl/policy.hpp"
#include "treerl/tasks.hpp"
#include "treerl/vocab.hpp"

namespace treerl {

enum class Task { Sentiment, Relatedness, Entailment, Generation };

enum class Regime {
  FixedLeft,
  FixedRight,
  Bidirectional,
  Supervised,
  SemiSupervised,
  Latent,
};

inline const char* task_name(Task t) {
  switch (t) {
    case Task::Sentiment: return "sentiment";
    case Task::Relatedness: return "relatedness";
    case Task::Entailment: return "entailment";
    case Task::Generation: return "generation";
  }
  return "?";
}

inline Task parse_task(const std::string& s) {
  if (s == "sentiment") return Task::Sentiment;
  if (s == "relatedness") return Task::Relatedness;
  if (s == "entailment") return Task::Entailment;
  if (s == "generation") return Task::Generation;
  throw DataError("unknown task: " + s);
}

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::FixedLeft: return "fixed-left";
    case Regime::FixedRight: return "fixed-right";
    case Regime::Bidirectional: return "bidirectional";
    case Regime::Supervised: return "supervised";
    case Regime::SemiSupervised: return "semi-supervised";
    case Regime::Latent: return "latent";
  }
  return "?";
}

inline Regime parse_regime(const std::string& s) {
  if (s == "fixed-left") return Regime::FixedLeft;
  if (s == "fixed-right") return Regime::FixedRight;
  if (s == "bidirectional") return Regime::Bidirectional;
  if (s == "supervised") return Regime::Supervised;
  if (s == "semi-supervised") return Regime::SemiSupervised;
  if (s == "latent") return Regime::Latent;
  throw DataError("unknown regime: " + s);
}

inline bool pair_task(Task t) {
  return t == Task::Relatedness || t == Task::Entailment;
}

inline bool regime_uses_policy(Regime r) {
  return r == Regime::SemiSupervised || r == Regime::Latent;
}

struct ModelConfig {
  Task task = Task::Sentiment;
  Regime regime = Regime::FixedLeft;
  std::size_t dim = 100;
  std::size_t emb_dim = 100;
  std::size_t track_dim = 50;
  std::size_t policy_hidden = 64;
  std::size_t head_hidden = 200;
  bool tracking = false;
  bool tanh_cell_output = false;

  std::size_t classes() const { return task == Task::Entailment ? 3 : 2; }

  EncoderDims encoder_dims() const {
    EncoderDims d;
    d.dim = dim;
    d.emb_dim = emb_dim;
    d.track_dim = track_dim;
    d.tracking = tracking;
    d.tanh_cell_output = tanh_cell_output;
    return d;
  }
};

// All trainable state for one run: the vocabulary-backed embedding matrix,
// one encoder (two for the bidirectional baseline), the policy when the
// regime samples structures, and the task head.
struct Model {
  ModelConfig cfg;
  Vocabulary vocab;
  std::vector<bool> pretrained;
  ParameterStore params;
  int emb = -1;
  EncoderParams enc;
  std::optional<EncoderParams> enc_r2l;
  std::optional<PolicyParams> policy;
  std::optional<ClassifierHead> cls;
  std::optional<RegressionHead> reg;
  std::optional<BowDecoder> bow;

  static Model build(
      ModelConfig cfg, Vocabulary vocab,
      const std::unordered_map<std::string, std::vector<double>>& pretrained,
      std::mt19937_64& rng) {
    Model m;
    m.cfg = cfg;
    m.vocab = std::move(vocab);
    EmbeddingInit einit =
        init_embeddings(m.vocab, cfg.emb_dim, pretrained, rng);
    m.emb = m.params.add("emb", std::move(einit.table));
    m.pretrained = std::move(einit.pretrained);
    EncoderDims d = cfg.encoder_dims();
    if (cfg.regime == Regime::Bidirectional) {
      m.enc = EncoderParams::create(m.params, "l2r.", d, rng);
      m.enc_r2l = EncoderParams::create(m.params, "r2l.", d, rng);
    } else {
      m.enc = EncoderParams::create(m.params, "", d, rng);
    }
    if (regime_uses_policy(cfg.regime))
      m.policy = PolicyParams::create(m.params, "", d, cfg.policy_hidden, rng);
    switch (cfg.task) {
      case Task::Sentiment:
        m.cls = ClassifierHead::create(m.params, "", cfg.dim, cfg.head_hidden,
                                       2, rng);
        break;
      case Task::Entailment:
        m.cls = ClassifierHead::create(m.params, "", 4 * cfg.dim,
                                       cfg.head_hidden, 3, rng);
        break;
      case Task::Relatedness:
        m.reg = RegressionHead::create(m.params, "", 2 * cfg.dim,
                                       cfg.head_hidden, rng);
        break;
      case Task::Generation:
        m.bow = BowDecoder::create(m.params, "", cfg.dim,
                                   static_cast<std::size_t>(m.vocab.size()),
                                   rng);
        break;
    }
    return m;
  }

  // Gather nodes for x_1..x_N.
  std::vector<int> embed(Graph& g, const std::vector<int>& tokens) const {
    int table = g.param(emb);
    std::vector<int> out;
    out.reserve(tokens.size());
    for (int tok : tokens)
      out.push_back(g.gather_row(table, static_cast<std::size_t>(tok)));
    return out;
  }
};

inline std::vector<std::pair<std::string, std::string>> model_metadata(
    const Model& m) {
  return {
      {"task", task_name(m.cfg.task)},
      {"regime", regime_name(m.cfg.regime)},
      {"dim", std::to_string(m.cfg.dim)},
      {"emb_dim", std::to_string(m.cfg.emb_dim)},
      {"track_dim", std::to_string(m.cfg.track_dim)},
      {"policy_hidden", std::to_string(m.cfg.policy_hidden)},
      {"head_hidden", std::to_string(m.cfg.head_hidden)},
      {"tracking", m.cfg.tracking ? "1" : "0"},
      {"tanh_cell_output", m.cfg.tanh_cell_output ? "1" : "0"},
      {"vocab", m.vocab.serialize()},
  };
}

// Rebuilds the model a checkpoint was saved from. The caller's config must
// agree with the stored one; every mismatch is reported by name.
inline Model model_from_checkpoint(const Checkpoint& ck, ModelConfig cfg) {
  auto require = [&](const std::string& key) -> const std::string& {
    const std::string* v = ck.find_meta(key);
    if (!v) throw DataError("checkpoint is missing metadata key: " + key);
    return *v;
  };
  auto check = [&](const std::string& key, const std::string& want) {
    const std::string& got = require(key);
    if (got != want)
      throw DataError("checkpoint/config mismatch for " + key +
                      ": checkpoint has " + got + ", config has " + want);
  };
  check("task", task_name(cfg.task));
  check("regime", regime_name(cfg.regime));
  check("dim", std::to_string(cfg.dim));
  check("emb_dim", std::to_string(cfg.emb_dim));
  check("track_dim", std::to_string(cfg.track_dim));
  check("policy_hidden", std::to_string(cfg.policy_hidden));
  check("head_hidden", std::to_string(cfg.head_hidden));
  check("tracking", cfg.tracking ? "1" : "0");
  check("tanh_cell_output", cfg.tanh_cell_output ? "1" : "0");
  Vocabulary vocab = Vocabulary::deserialize(require("vocab"));
  std::mt19937_64 rng(0);  // values are replaced below
  Model m = Model::build(cfg, std::move(vocab), {}, rng);
  apply_checkpoint(ck, m.params);
  return m;
}

}  // namespace treerl
