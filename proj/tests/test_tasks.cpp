#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "treerl/model.hpp"
#include "treerl/tasks.hpp"

using namespace treerl;

namespace {

Vocabulary toy_vocab(int n) {
  Vocabulary v;
  for (int i = 0; i < n; ++i) v.add("w" + std::to_string(i));
  return v;
}

Model toy_model(Task task, std::uint64_t seed, std::size_t d = 8,
                int vocab = 10) {
  ModelConfig cfg;
  cfg.task = task;
  cfg.regime = Regime::FixedLeft;
  cfg.dim = d;
  cfg.emb_dim = d;
  cfg.head_hidden = 16;
  std::mt19937_64 rng(seed);
  return Model::build(cfg, toy_vocab(vocab), {}, rng);
}

void zero_all(ParameterStore& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (double& e : ps.at(static_cast<int>(i)).value.v) e = 0.0;
}

int encode_fixed(Graph& g, const Model& m, const std::vector<int>& toks) {
  std::vector<int> words = m.embed(g, toks);
  RolloutResult r = run_parser(
      g, m.enc, words,
      ActionSource::fixed(fixed_order_actions(CompositionOrder::LeftToRight,
                                              static_cast<int>(toks.size()))));
  return r.sentence.h;
}

}  // namespace

TEST_CASE("classify") {
  SECTION("zero parameters is uniform over two classes") {
    Model m = toy_model(Task::Sentiment, 1);
    zero_all(m.params);
    Graph g(&m.params);
    int lp = classify(g, *m.cls, g.zeros(8));
    REQUIRE(g.value(lp).v[0] == Catch::Approx(std::log(0.5)));
    REQUIRE(g.value(lp).v[1] == Catch::Approx(std::log(0.5)));
  }

  SECTION("log-probabilities exponentiate to a distribution") {
    Model m = toy_model(Task::Sentiment, 2);
    Graph g(&m.params);
    int lp = classify(g, *m.cls, encode_fixed(g, m, {0, 3, 5}));
    double total = 0.0;
    for (double e : g.value(lp).v) total += std::exp(e);
    REQUIRE(std::abs(total - 1.0) < 1e-12);
  }

  SECTION("end-to-end gradient through encode") {
    Model m = toy_model(Task::Sentiment, 3);
    auto fn = [&](bool grad) {
      Graph g(&m.params);
      int loss = classify_loss(g, *m.cls, encode_fixed(g, m, {0, 1, 2, 3, 4}), 1);
      double v = g.scalar_value(loss);
      if (grad) g.backward(loss);
      return v;
    };
    FdReport rep = finite_difference_check(fn, m.params, 1e-5, 1e-4);
    INFO("max rel err " << rep.max_rel_err);
    REQUIRE(rep.pass);
  }
}

TEST_CASE("relate") {
  SECTION("identical inputs zero the squared-difference feature") {
    Model m = toy_model(Task::Relatedness, 4);
    Graph g(&m.params);
    int s = encode_fixed(g, m, {1, 2});
    PairFeatures f = pair_features(g, s, s);
    REQUIRE(g.value(f.u).v == std::vector<double>(8, 0.0));
    for (std::size_t i = 0; i < 8; ++i)
      REQUIRE(g.value(f.v).v[i] ==
              Catch::Approx(g.value(s).v[i] * g.value(s).v[i]));
  }

  SECTION("zero parameters predict zero") {
    Model m = toy_model(Task::Relatedness, 5);
    zero_all(m.params);
    Graph g(&m.params);
    int yhat = relate(g, *m.reg, g.zeros(8), g.zeros(8));
    REQUIRE(g.scalar_value(yhat) == 0.0);
  }

  SECTION("prediction is symmetric in the sentence order") {
    Model m = toy_model(Task::Relatedness, 6);
    Graph g(&m.params);
    int s1 = encode_fixed(g, m, {0, 1, 2});
    int s2 = encode_fixed(g, m, {3, 4});
    REQUIRE(g.scalar_value(relate(g, *m.reg, s1, s2)) ==
            g.scalar_value(relate(g, *m.reg, s2, s1)));
  }

  SECTION("loss vanishes only at the target") {
    Model m = toy_model(Task::Relatedness, 7);
    Graph g(&m.params);
    int s1 = encode_fixed(g, m, {0, 1});
    int s2 = encode_fixed(g, m, {2, 3});
    double yhat = g.scalar_value(relate(g, *m.reg, s1, s2));
    REQUIRE(g.scalar_value(relate_loss(g, *m.reg, s1, s2, yhat)) ==
            Catch::Approx(0.0).margin(1e-15));
    REQUIRE(g.scalar_value(relate_loss(g, *m.reg, s1, s2, yhat + 0.5)) ==
            Catch::Approx(0.25));
  }

  SECTION("end-to-end gradient through both encodes") {
    Model m = toy_model(Task::Relatedness, 8);
    auto fn = [&](bool grad) {
      Graph g(&m.params);
      int s1 = encode_fixed(g, m, {0, 1, 2, 3});
      int s2 = encode_fixed(g, m, {4, 5, 6});
      int loss = relate_loss(g, *m.reg, s1, s2, 3.0);
      double v = g.scalar_value(loss);
      if (grad) g.backward(loss);
      return v;
    };
    FdReport rep = finite_difference_check(fn, m.params, 1e-5, 1e-4);
    INFO("max rel err " << rep.max_rel_err);
    REQUIRE(rep.pass);
  }
}

TEST_CASE("entail") {
  SECTION("zero parameters is uniform over three classes") {
    Model m = toy_model(Task::Entailment, 9);
    zero_all(m.params);
    Graph g(&m.params);
    int lp = entail(g, *m.cls, g.zeros(8), g.zeros(8));
    for (double e : g.value(lp).v)
      REQUIRE(e == Catch::Approx(std::log(1.0 / 3.0)));
  }

  SECTION("swapping the pair moves only the sentence blocks") {
    Model m = toy_model(Task::Entailment, 10);
    Graph g(&m.params);
    int s1 = encode_fixed(g, m, {0, 1, 2});
    int s2 = encode_fixed(g, m, {3, 4});
    PairFeatures f12 = pair_features(g, s1, s2);
    PairFeatures f21 = pair_features(g, s2, s1);
    int cat12 = g.concat({f12.u, f12.v, s1, s2});
    int cat21 = g.concat({f21.u, f21.v, s2, s1});
    const auto& a = g.value(cat12).v;
    const auto& b = g.value(cat21).v;
    for (std::size_t i = 0; i < 16; ++i) REQUIRE(a[i] == b[i]);  // u, v agree
    for (std::size_t i = 0; i < 8; ++i) {
      REQUIRE(a[16 + i] == b[24 + i]);
      REQUIRE(a[24 + i] == b[16 + i]);
    }
  }

  SECTION("end-to-end gradient") {
    Model m = toy_model(Task::Entailment, 11);
    auto fn = [&](bool grad) {
      Graph g(&m.params);
      int s1 = encode_fixed(g, m, {0, 1, 2});
      int s2 = encode_fixed(g, m, {3, 4, 5, 6});
      int loss = entail_loss(g, *m.cls, s1, s2, 2);
      double v = g.scalar_value(loss);
      if (grad) g.backward(loss);
      return v;
    };
    FdReport rep = finite_difference_check(fn, m.params, 1e-5, 1e-4);
    INFO("max rel err " << rep.max_rel_err);
    REQUIRE(rep.pass);
  }
}

TEST_CASE("bow decoder") {
  SECTION("zero sentence vector is uniform over the vocabulary") {
    Model m = toy_model(Task::Generation, 12, 8, 9);  // 9 words + <unk>
    REQUIRE(m.vocab.size() == 10);
    Graph g(&m.params);
    int nll = bow_nll(g, *m.bow, g.zeros(8), {3});
    REQUIRE(g.scalar_value(nll) == Catch::Approx(std::log(10.0)));
  }

  SECTION("uniform predictions give perplexity equal to the vocabulary size") {
    Model m = toy_model(Task::Generation, 13, 8, 9);
    Graph g(&m.params);
    std::vector<int> targets{0, 5, 9, 2};
    int nll = bow_nll(g, *m.bow, g.zeros(8), targets);
    double ppl = std::exp(g.scalar_value(nll) / targets.size());
    REQUIRE(std::abs(ppl - 10.0) < 1e-9);
  }

  SECTION("repeated tokens add their losses") {
    Model m = toy_model(Task::Generation, 14, 8, 10);
    Graph g(&m.params);
    int s = encode_fixed(g, m, {0, 1, 2});
    double one = g.scalar_value(bow_nll(g, *m.bow, s, {4}));
    double three = g.scalar_value(bow_nll(g, *m.bow, s, {4, 4, 4}));
    REQUIRE(three == Catch::Approx(3.0 * one));
  }

  SECTION("empty target is an error") {
    Model m = toy_model(Task::Generation, 15, 8, 10);
    Graph g(&m.params);
    REQUIRE_THROWS_AS(bow_nll(g, *m.bow, g.zeros(8), {}), DataError);
  }

  SECTION("end-to-end gradient") {
    Model m = toy_model(Task::Generation, 16, 8, 12);
    auto fn = [&](bool grad) {
      Graph g(&m.params);
      int s = encode_fixed(g, m, {0, 1, 2, 3, 4, 5});
      int loss = bow_nll(g, *m.bow, s, {7, 2, 7, 11});
      double v = g.scalar_value(loss);
      if (grad) g.backward(loss);
      return v;
    };
    FdReport rep = finite_difference_check(fn, m.params, 1e-5, 1e-4);
    INFO("max rel err " << rep.max_rel_err);
    REQUIRE(rep.pass);
  }
}

TEST_CASE("bidirectional mean") {
  ParameterStore ps;
  Graph g(&ps);

  SECTION("mean of equal vectors is the vector") {
    int a = g.constant(Tensor::vec({1.5, -2.0}));
    REQUIRE(g.value(bidirectional_mean(g, a, a)).v ==
            std::vector<double>{1.5, -2.0});
  }
  SECTION("elementwise average") {
    int a = g.constant(Tensor::vec({2, 0}));
    int b = g.constant(Tensor::vec({0, 2}));
    REQUIRE(g.value(bidirectional_mean(g, a, b)).v ==
            std::vector<double>{1, 1});
  }
  SECTION("output keeps the encoder dimension") {
    int a = g.zeros(7);
    int b = g.zeros(7);
    REQUIRE(g.value(bidirectional_mean(g, a, b)).size() == 7);
  }
}
