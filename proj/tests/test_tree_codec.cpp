#include <random>

#include "catch_amalgamated.hpp"
#include "support/oracles.hpp"
#include "treerl/tree.hpp"

using namespace treerl;

namespace {

BinaryTree tree_of(const std::string& actions, int n) {
  return actions_to_tree(parse_actions(actions), n);
}

}  // namespace

TEST_CASE("actions_to_tree") {
  SECTION("left-branching four tokens") {
    BinaryTree t = tree_of("SSRSRSR", 4);
    // (((0 1) 2) 3)
    BinaryTree want;
    int l01 = want.add_internal(want.add_leaf(0), want.add_leaf(1));
    int l012 = want.add_internal(l01, want.add_leaf(2));
    want.root = want.add_internal(l012, want.add_leaf(3));
    REQUIRE(t == want);
  }
  SECTION("single token") {
    REQUIRE(tree_of("S", 1) == BinaryTree::leaf(0));
  }
  SECTION("right-pair inside") {
    BinaryTree t = tree_of("SSSRR", 3);
    BinaryTree want;
    int l12 = want.add_internal(want.add_leaf(1), want.add_leaf(2));
    want.root = want.add_internal(want.add_leaf(0), l12);
    REQUIRE(t == want);
  }
  SECTION("errors") {
    REQUIRE_THROWS_MATCHES(
        tree_of("SRS", 2), DataError,
        Catch::Matchers::MessageMatches(
            Catch::Matchers::ContainsSubstring("reduce on stack")));
    REQUIRE_THROWS_MATCHES(tree_of("SSS", 2), DataError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("shift past")));
    REQUIRE_THROWS_AS(tree_of("SS", 2), DataError);  // leftover stack
  }
}

TEST_CASE("tree_to_actions") {
  REQUIRE(format_actions(tree_to_actions(tree_of("SSRSRSR", 4))) == "SSRSRSR");
  REQUIRE(format_actions(tree_to_actions(BinaryTree::leaf(0))) == "S");
  REQUIRE(format_actions(tree_to_actions(tree_of("SSSRR", 3))) == "SSSRR");
}

TEST_CASE("round trip over random valid sequences") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    int n = std::uniform_int_distribution<int>(1, 20)(rng);
    ActionSequence a = testing::random_valid_actions(n, rng);
    REQUIRE(actions_valid(a, n));
    BinaryTree t = actions_to_tree(a, n);
    REQUIRE(tree_to_actions(t) == a);
    REQUIRE(t.num_leaves() == n);
    if (n >= 2) REQUIRE(spans(t).size() == static_cast<std::size_t>(n - 1));
  }
}

TEST_CASE("spans") {
  REQUIRE(spans(tree_of("SSRSRSR", 4)) ==
          SpanSet{{0, 2}, {0, 3}, {0, 4}});
  REQUIRE(spans(tree_of("SSSSRRR", 4)) ==
          SpanSet{{2, 4}, {1, 4}, {0, 4}});
  REQUIRE(spans(BinaryTree::leaf(0)).empty());
}

TEST_CASE("spans agree with the brute-force enumerator") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    int n = std::uniform_int_distribution<int>(1, 12)(rng);
    BinaryTree t = actions_to_tree(testing::random_valid_actions(n, rng), n);
    REQUIRE(spans(t) == testing::brute_force_spans(t));
  }
}

TEST_CASE("fixed_order_actions") {
  REQUIRE(format_actions(fixed_order_actions(CompositionOrder::LeftToRight, 4)) ==
          "SSRSRSR");
  REQUIRE(format_actions(fixed_order_actions(CompositionOrder::RightToLeft, 4)) ==
          "SSSSRRR");
  REQUIRE(actions_to_tree(fixed_order_actions(CompositionOrder::RightToLeft, 3),
                          3) == tree_of("SSSRR", 3));
  REQUIRE(format_actions(fixed_order_actions(CompositionOrder::LeftToRight, 1)) ==
          "S");
  REQUIRE(format_actions(fixed_order_actions(CompositionOrder::RightToLeft, 1)) ==
          "S");
  REQUIRE_THROWS_AS(fixed_order_actions(CompositionOrder::LeftToRight, 0),
                    DataError);
  for (int n = 1; n <= 24; ++n) {
    REQUIRE(actions_valid(fixed_order_actions(CompositionOrder::LeftToRight, n), n));
    REQUIRE(actions_valid(fixed_order_actions(CompositionOrder::RightToLeft, n), n));
  }
}

TEST_CASE("parse_sexpr") {
  SECTION("labeled treebank line") {
    NaryTree t = parse_sexpr("(S (NP a boy) (VP runs))");
    REQUIRE(t.leaf_tokens() == std::vector<std::string>{"a", "boy", "runs"});
    REQUIRE(nary_spans(t) == SpanSet{{0, 2}, {0, 3}});
  }
  SECTION("preterminal collapses to its token") {
    NaryTree t = parse_sexpr("(X w)");
    REQUIRE(t.leaf_tokens() == std::vector<std::string>{"w"});
    REQUIRE(t.nodes[static_cast<std::size_t>(t.root)].leaf());
  }
  SECTION("unlabeled nesting keeps all atoms as leaves") {
    NaryTree t = parse_sexpr("((a b) c)");
    REQUIRE(t.leaf_tokens() == std::vector<std::string>{"a", "b", "c"});
    NaryTree labeled = parse_sexpr("(S (NP a b) c)");
    REQUIRE(nary_spans(t) == nary_spans(labeled));
  }
  SECTION("errors") {
    REQUIRE_THROWS_AS(parse_sexpr(""), DataError);
    REQUIRE_THROWS_AS(parse_sexpr("   "), DataError);
    REQUIRE_THROWS_AS(parse_sexpr("(a (b c)"), DataError);
    REQUIRE_THROWS_AS(parse_sexpr("(a b))"), DataError);
    REQUIRE_THROWS_AS(parse_sexpr("(a () b)"), DataError);
    REQUIRE_THROWS_AS(parse_sexpr("(a b) (c d)"), DataError);
  }
}

namespace {

int nary_leaf(NaryTree& t, const std::string& tok) {
  t.nodes.push_back(NaryTree::Node{tok, {}});
  return static_cast<int>(t.nodes.size()) - 1;
}

int nary_node(NaryTree& t, std::vector<int> kids) {
  t.nodes.push_back(NaryTree::Node{"", std::move(kids)});
  return static_cast<int>(t.nodes.size()) - 1;
}

// flat three-child tree (a b c)
NaryTree flat3() {
  NaryTree t;
  t.root = nary_node(
      t, {nary_leaf(t, "a"), nary_leaf(t, "b"), nary_leaf(t, "c")});
  return t;
}

}  // namespace

TEST_CASE("binarize") {
  SECTION("left fold") {
    REQUIRE(binarize(flat3()) == tree_of("SSRSR", 3));  // ((a b) c)
  }
  SECTION("right fold switch") {
    REQUIRE(binarize(flat3(), /*right_fold=*/true) ==
            tree_of("SSSRR", 3));  // (a (b c))
  }
  SECTION("binary input unchanged") {
    NaryTree t;
    int ab = nary_node(t, {nary_leaf(t, "a"), nary_leaf(t, "b")});
    t.root = nary_node(t, {ab, nary_leaf(t, "c")});
    REQUIRE(binarize(t) == tree_of("SSRSR", 3));
    REQUIRE(binarize(t, true) == tree_of("SSRSR", 3));
    // and via the parser for the unlabeled string form
    REQUIRE(binarize(parse_sexpr("((a b) c)")) == tree_of("SSRSR", 3));
  }
  SECTION("unary chain collapses to a leaf") {
    BinaryTree t = binarize(parse_sexpr("(X (Y (Z w)))"));
    REQUIRE(t == BinaryTree::leaf(0));
  }
  SECTION("leaf order and count preserved") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
      int n = std::uniform_int_distribution<int>(2, 10)(rng);
      BinaryTree t = actions_to_tree(testing::random_valid_actions(n, rng), n);
      std::vector<std::string> toks;
      for (int k = 0; k < n; ++k) toks.push_back("w" + std::to_string(k));
      NaryTree reparsed = parse_sexpr(to_sexpr(t, toks));
      REQUIRE(reparsed.leaf_tokens() == toks);
      REQUIRE(binarize(reparsed) == t);
    }
  }
}

TEST_CASE("sexpr emission") {
  REQUIRE(to_sexpr(BinaryTree::leaf(0), {"w"}) == "(w)");
  REQUIRE(to_sexpr(tree_of("SSSRR", 3), {"a", "b", "c"}) ==
          "((a) ((b) (c)))");
  REQUIRE(parse_actions("SSRSR").size() == 5);
  REQUIRE_THROWS_AS(parse_actions("SSX"), DataError);
}
