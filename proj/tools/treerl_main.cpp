// treerl command line: train / eval / induce over tab-separated corpora.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric abort.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treerl/errors.hpp"
#include "treerl/run.hpp"

namespace {

// Expands "--config FILE" into the tokens stored in FILE (one "--flag value"
// per line), so a config echo written by `train` reruns the exact job.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a != "--config") {
      args.push_back(std::move(a));
      continue;
    }
    if (i + 1 >= argc) throw treerl::DataError("--config needs a file path");
    std::ifstream is(argv[++i]);
    if (!is)
      throw treerl::DataError(std::string("cannot read config: ") + argv[i]);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::size_t sp = line.find(' ');
      args.push_back(line.substr(0, sp));
      if (sp != std::string::npos) args.push_back(line.substr(sp + 1));
    }
  }
  return args;
}

void add_common_flags(CLI::App* cmd, treerl::RunConfig& cfg,
                      std::string& task, std::string& regime,
                      std::string& decode, std::string& binarize) {
  cmd->add_option("--task", task, "sentiment | relatedness | entailment | generation");
  cmd->add_option("--regime", regime,
                  "fixed-left | fixed-right | bidirectional | supervised | "
                  "semi-supervised | latent");
  cmd->add_option("--train", cfg.train_path, "training corpus");
  cmd->add_option("--dev", cfg.dev_path, "development corpus");
  cmd->add_option("--test", cfg.test_path, "test corpus / input sentences");
  cmd->add_option("--embeddings", cfg.embeddings_path,
                  "pretrained embedding text file");
  cmd->add_option("--gold-trees", cfg.gold_trees_path,
                  "gold trees aligned with the primary split");
  cmd->add_option("--gold-trees-dev", cfg.gold_trees_dev_path,
                  "gold trees aligned with --dev (train command)");
  cmd->add_option("--checkpoint", cfg.checkpoint_path, "checkpoint to load");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--dim", cfg.model.dim, "sentence vector width");
  cmd->add_option("--emb-dim", cfg.model.emb_dim, "word embedding width");
  cmd->add_option("--track-dim", cfg.model.track_dim,
                  "tracking LSTM hidden size");
  cmd->add_option("--tracking", cfg.tracking_mode,
                  "auto | on | off (auto: on for entailment)");
  cmd->add_option("--policy-hidden", cfg.model.policy_hidden,
                  "policy network hidden size");
  cmd->add_option("--head-hidden", cfg.model.head_hidden,
                  "task head hidden size");
  cmd->add_flag("--tanh-cell-output", cfg.model.tanh_cell_output,
                "use h = o * tanh(c) instead of h = o * c");
  cmd->add_option("--binarize", binarize,
                  "left | right fold for gold n-ary trees");
  cmd->add_option("--lr", cfg.train.lr, "learning rate");
  cmd->add_option("--l2", cfg.train.l2, "L2 regularization constant");
  cmd->add_option("--epochs", cfg.train.max_epochs, "maximum epochs");
  cmd->add_option("--sup-epochs", cfg.train.sup_epochs,
                  "supervised phase length E (-1: auto)");
  cmd->add_option("--patience", cfg.train.patience,
                  "early-stop patience in epochs");
  cmd->add_option("--restarts", cfg.train.restarts,
                  "independent restarts, best dev wins");
  cmd->add_flag("--baseline", cfg.train.baseline,
                "subtract a running reward mean in the policy gradient");
  cmd->add_option("--decode", decode, "greedy | sample");
  cmd->add_flag("--timing", cfg.timing,
                "record real wall time in the metrics log (breaks "
                "byte-reproducibility)");
  cmd->add_option("--seed", cfg.train.seed, "run seed")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-structure sentence encoder: shift-reduce composition "
               "orders trained with policy gradients"};
  app.require_subcommand(1);

  treerl::RunConfig cfg;
  cfg.train.sup_epochs = -1;  // auto
  std::string task = "sentiment", regime = "fixed-left", decode = "greedy",
              binarize = "left";

  CLI::App* train_cmd = app.add_subcommand("train", "fit a model");
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint");
  CLI::App* induce_cmd =
      app.add_subcommand("induce", "emit trees for plain sentences");
  for (CLI::App* cmd : {train_cmd, eval_cmd, induce_cmd})
    add_common_flags(cmd, cfg, task, regime, decode, binarize);

  std::vector<std::string> args;
  try {
    args = expand_config_args(argc, argv);
  } catch (const treerl::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    std::vector<const char*> cargs;
    cargs.push_back(argv[0]);
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    cfg.model.task = treerl::parse_task(task);
    cfg.model.regime = treerl::parse_regime(regime);
    if (decode == "greedy")
      cfg.train.decode = treerl::DecodeMode::Greedy;
    else if (decode == "sample")
      cfg.train.decode = treerl::DecodeMode::Sample;
    else
      throw treerl::DataError("bad --decode value: " + decode);
    if (binarize == "right")
      cfg.right_binarize = true;
    else if (binarize != "left")
      throw treerl::DataError("bad --binarize value: " + binarize);
    treerl::resolve_tracking(cfg);

    if (train_cmd->parsed()) {
      cfg.command = "train";
      treerl::cmd_train(cfg);
    } else if (eval_cmd->parsed()) {
      cfg.command = "eval";
      treerl::cmd_eval(cfg);
    } else {
      cfg.command = "induce";
      treerl::cmd_induce(cfg);
    }
  } catch (const treerl::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 3;
  } catch (const treerl::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
