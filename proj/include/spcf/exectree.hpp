#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spcf/rational.hpp"
#include "spcf/symexec.hpp"
#include "spcf/term.hpp"

namespace spcf {

// Big-step symbolic execution tree of a first-order fixpoint body with the
// argument unknown. Branch nodes are red when the guard mentions the unknown
// argument; strategies replace red branches by an explicit choice.
struct ExecNode;
using ExecTree = std::shared_ptr<const ExecNode>;

struct ExecNode {
  enum Kind { Leaf, FixNode, ScoreNode, Branch, ChooseLeft, ChooseRight } kind;
  Term value;            // leaf value, or the guard for Score/Branch/Choose
  ExecTree left, right;  // children (unary nodes use left)
  bool red = false;      // Branch: guard mentions the unknown argument
};

struct TreeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BuiltTree {
  ExecTree tree;
  std::size_t var_count = 0;  // sample variables allocated
};

// Builds the execution tree of body[unknown/x, rec-hole/f] for a first-order
// fixpoint. Rejects nested fixpoints and bodies failing the progress check.
BuiltTree build_tree(const Term& fixpoint);

// No sample variable used in a red guard occurs in the subtree below it.
bool sufficient_independence(const ExecTree& tree);

// All strategies (red branches resolved); reachable ones only.
std::vector<ExecTree> strategies(const ExecTree& tree);

// Maximum number of fixpoint nodes on any root-to-leaf path.
std::size_t tree_rank(const ExecTree& tree);

struct TreePath {
  ConstraintSet constraints;
  std::size_t mu_count = 0;
};

// Terminating paths of a strategy with the constraints accumulated from
// white branches and scores (red choices contribute none).
std::vector<TreePath> strategy_paths(const ExecTree& strategy, std::size_t var_count);

// P(S, n): probability that a path with at most n fixpoint nodes is taken.
// Exact; throws TreeError if a white guard is not linear.
Rat path_prob(const ExecTree& strategy, std::size_t var_count, std::size_t n);

struct PApprox {
  std::map<std::size_t, Rat> mass;  // support with nonzero mass
  std::size_t rank = 0;

  Rat total() const {
    Rat t(0);
    for (const auto& [n, w] : mass) t += w;
    return t;
  }
};

std::string papprox_to_string(const PApprox& p);

// Worst-case counting distribution over all strategies.
PApprox p_approx(const BuiltTree& built);

// Monte-Carlo estimate of the counting pattern of the fixpoint at a concrete
// argument (validation only; runs the counting reduction on random traces).
std::map<std::size_t, double> empirical_counting_pattern(const Term& fixpoint, const Rat& arg,
                                                         std::size_t samples, std::uint64_t seed = 1);

// Body with argument and recursion hole substituted.
Term instantiate_body(const Term& fixpoint, const Term& arg_value);

std::string tree_to_dot(const ExecTree& tree);

}  // namespace spcf
