#include <doctest.h>

#include <cmath>
#include <string>

#include "spcf/exectree.hpp"
#include "spcf/parser.hpp"
#include "spcf/verifier.hpp"

using namespace spcf;

namespace {

Term corpus_fix(const std::string& name) {
  return find_fixpoint(parse_file(std::string(SPCF_CORPUS_DIR) + "/" + name));
}

std::size_t count_kind(const ExecTree& t, ExecNode::Kind kind) {
  std::size_t n = t->kind == kind ? 1 : 0;
  if (t->left) n += count_kind(t->left, kind);
  if (t->right) n += count_kind(t->right, kind);
  return n;
}

std::size_t count_red(const ExecTree& t) {
  std::size_t n = (t->kind == ExecNode::Branch && t->red) ? 1 : 0;
  if (t->left) n += count_red(t->left);
  if (t->right) n += count_red(t->right);
  return n;
}

}  // namespace

TEST_CASE("trivial fixpoint gives a single leaf") {
  BuiltTree b = build_tree(parse("fix f x. x"));
  CHECK(b.tree->kind == ExecNode::Leaf);
  CHECK(b.var_count == 0);
  CHECK(tree_rank(b.tree) == 0);
  CHECK(sufficient_independence(b.tree));
  CHECK(strategies(b.tree).size() == 1);
}

TEST_CASE("two-call-site body: one white branch, two chained calls") {
  BuiltTree b = build_tree(corpus_fix("prog2_half.spcf"));
  REQUIRE(b.tree->kind == ExecNode::Branch);
  CHECK_FALSE(b.tree->red);
  CHECK(b.tree->left->kind == ExecNode::Leaf);
  // right: two fixpoint nodes then the unknown leaf
  CHECK(b.tree->right->kind == ExecNode::FixNode);
  CHECK(b.tree->right->left->kind == ExecNode::FixNode);
  CHECK(b.tree->right->left->left->kind == ExecNode::Leaf);
  CHECK(tree_rank(b.tree) == 2);
  CHECK(count_red(b.tree) == 0);
}

TEST_CASE("fatigue mixture: red branch over the unknown, paths of 0/2/3 calls") {
  BuiltTree b = build_tree(corpus_fix("sigmix_06.spcf"));
  // top: white branch on the acceptance sample
  REQUIRE(b.tree->kind == ExecNode::Branch);
  CHECK_FALSE(b.tree->red);
  CHECK(b.tree->left->kind == ExecNode::Leaf);
  // below: the red fatigue branch
  REQUIRE(b.tree->right->kind == ExecNode::Branch);
  CHECK(b.tree->right->red);
  CHECK(count_red(b.tree) == 1);
  CHECK(tree_rank(b.tree) == 3);
  CHECK(sufficient_independence(b.tree));
  CHECK(strategies(b.tree).size() == 2);

  PApprox p = p_approx(b);
  REQUIRE(p.mass.size() == 3);
  CHECK(p.mass.at(0) == Rat(3, 5));
  CHECK(p.mass.at(2) == Rat(1, 5));
  CHECK(p.mass.at(3) == Rat(1, 5));
  CHECK(p.total() == 1);
}

TEST_CASE("independence breaks when a red-guard sample is reused below") {
  // if (sample + x) ... with the same sample reused below the red node
  Term bad = parse("fix f x. let s = sample in (if s + x then s (+) f(x) else f(x))");
  BuiltTree b = build_tree(bad);
  CHECK(count_red(b.tree) >= 1);
  CHECK_FALSE(sufficient_independence(b.tree));
}

TEST_CASE("strategy count prunes red nodes under discarded sides") {
  // one red node sits under the right side of another red node: 3 reachable
  // strategies rather than 4
  Term t = parse(
      "fix f x. if sig(x) - sample then 0 else (if sig(x) - 1/4 - sample then f(x) else f^2(x))");
  BuiltTree b = build_tree(t);
  CHECK(count_red(b.tree) == 2);
  CHECK(strategies(b.tree).size() == 3);
}

TEST_CASE("path probabilities per strategy") {
  BuiltTree b = build_tree(corpus_fix("prog2_half.spcf"));
  auto strats = strategies(b.tree);
  REQUIRE(strats.size() == 1);
  CHECK(path_prob(strats[0], b.var_count, 0) == Rat(1, 2));
  CHECK(path_prob(strats[0], b.var_count, 1) == Rat(1, 2));
  CHECK(path_prob(strats[0], b.var_count, 2) == 1);
}

TEST_CASE("worst-case distribution for the error-mixture family") {
  BuiltTree b = build_tree(corpus_fix("errmix_065.spcf"));
  CHECK(sufficient_independence(b.tree));
  PApprox p = p_approx(b);
  // p = 13/20: mass (1-p)^2/2 on 2 and (1-p^2)/2 on 3
  CHECK(p.mass.at(0) == Rat(13, 20));
  CHECK(p.mass.at(2) == Rat(49, 800));
  CHECK(p.mass.at(3) == Rat(231, 800));
  CHECK(p.total() == 1);
}

TEST_CASE("masses are nonnegative and sum to at most one on the corpus") {
  for (const char* name : {"geo_half.spcf", "prog2_half.spcf", "print3_23.spcf", "sigmix_06.spcf",
                           "errmix_065.spcf", "scoremix.spcf"}) {
    BuiltTree b = build_tree(corpus_fix(name));
    PApprox p = p_approx(b);
    for (const auto& [n, w] : p.mass) {
      CHECK(w > 0);
      CHECK(n <= p.rank);
    }
    CHECK(p.total() <= 1);
  }
}

TEST_CASE("nested recursion and non-first-order fixpoints are rejected") {
  CHECK_THROWS_AS(build_tree(parse("fix f x. (fix g y. y) x")), TreeError);
  CHECK_THROWS_AS(build_tree(parse("fix f x. if f x then x else f x")), TreeError);
}

TEST_CASE("empirical counting pattern dominates the worst case (3-sigma)") {
  Term fix = corpus_fix("sigmix_06.spcf");
  BuiltTree b = build_tree(fix);
  PApprox p = p_approx(b);
  const std::size_t N = 4000;
  for (const Rat& r : {Rat(-2), Rat(0), Rat(1), Rat(5)}) {
    auto emp = empirical_counting_pattern(fix, r, N, 97);
    // cumulative dominance with a binomial 3-sigma allowance
    double cum_emp = 0;
    Rat cum_p(0);
    for (std::size_t n = 0; n <= p.rank; ++n) {
      auto it = emp.find(n);
      if (it != emp.end()) cum_emp += it->second;
      auto ip = p.mass.find(n);
      if (ip != p.mass.end()) cum_p += ip->second;
      double pd = rat_to_double(cum_p);
      double sigma = std::sqrt(std::max(pd * (1 - pd), 1e-9) / static_cast<double>(N));
      CHECK(cum_emp >= pd - 3 * sigma);
    }
  }
}

TEST_CASE("empirical pattern matches the closed forms of the fatigue mixture") {
  // pattern(0) = p, pattern(2) = (1-p)/2 (2 - sig(r)), pattern(3) = (1-p)/2 sig(r)
  Term fix = corpus_fix("sigmix_06.spcf");
  const std::size_t N = 20000;
  const double p = 0.6;
  for (double r : {-2.0, 0.0, 1.0}) {
    auto emp = empirical_counting_pattern(fix, rat_from_string(std::to_string(r)).value(), N, 13);
    double sig = 1.0 / (1.0 + std::exp(-r));
    double want0 = p;
    double want2 = (1 - p) * 0.5 * (2 - sig);
    double want3 = (1 - p) * 0.5 * sig;
    auto near = [&](double got, double want) {
      double sigma = std::sqrt(std::max(want * (1 - want), 1e-9) / static_cast<double>(N));
      return std::abs(got - want) <= 3 * sigma + 1e-9;
    };
    CHECK(near(emp.count(0) ? emp.at(0) : 0.0, want0));
    CHECK(near(emp.count(2) ? emp.at(2) : 0.0, want2));
    CHECK(near(emp.count(3) ? emp.at(3) : 0.0, want3));
    CHECK_FALSE(emp.count(1));
  }
}

TEST_CASE("rank bounds every empirically observed call count") {
  for (const char* name : {"prog2_half.spcf", "sigmix_06.spcf", "errmix_065.spcf"}) {
    Term fix = corpus_fix(name);
    BuiltTree b = build_tree(fix);
    PApprox p = p_approx(b);
    for (const Rat& r : {Rat(0), Rat(3)}) {
      auto emp = empirical_counting_pattern(fix, r, 2000, 5);
      for (const auto& [n, freq] : emp) {
        (void)freq;
        CHECK(n <= p.rank);
      }
    }
  }
}

TEST_CASE("DOT dump mentions the red node") {
  BuiltTree b = build_tree(corpus_fix("sigmix_06.spcf"));
  std::string dot = tree_to_dot(b.tree);
  CHECK(dot.find("color=red") != std::string::npos);
  CHECK(dot.find("digraph") != std::string::npos);
}
