#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spcf/interval.hpp"
#include "spcf/term.hpp"

namespace spcf {

// Conditional oracle: a word over {L, R} fixing every branch decision.
enum class Dir : std::uint8_t { L, R };
using Oracle = std::vector<Dir>;
std::string oracle_to_string(const Oracle& o);

enum class Rel { LeqZero, GtZero, GeqZero };

// A symbolic inequality V ~ 0 where V is a symbolic value over rational
// constants, sample variables and postponed primitives.
struct Constraint {
  Term value;
  Rel rel;
};

struct ConstraintSet {
  std::vector<Constraint> items;
  std::size_t var_count = 0;    // sample variables consumed so far
  bool trivially_unsat = false;  // some constant constraint failed
};

std::string constraint_to_string(const Constraint& c);

struct SymRun {
  enum Kind { Done, NoPath, Budget } kind = NoPath;
  Term value;
  ConstraintSet constraints;
  std::size_t steps = 0;
  std::string reason;
};

// Runs the conditional-oracle symbolic reduction: sample yields a fresh
// sample variable, an L (resp. R) letter resolves a conditional recording
// V <= 0 (resp. V > 0), score records V >= 0. Done requires a value with the
// oracle fully consumed.
SymRun symbolic_run(const Term& t, const Oracle& oracle, std::size_t budget = 1000000);

struct PathResult {
  Oracle oracle;
  Term value;
  ConstraintSet constraints;
  std::size_t steps = 0;
};

// Breadth-first enumeration of terminating oracles, forking at each
// conditional instead of re-running prefixes; prefixes that die (stuck,
// unsatisfiable constant constraint, out of budget) are pruned.
class OracleFrontier {
 public:
  OracleFrontier(Term t, std::size_t step_budget);

  // Next terminating path in breadth-first (fork-count, L-before-R) order.
  std::optional<PathResult> next();

  std::size_t configs_explored() const { return configs_explored_; }

 private:
  struct CNode {
    Constraint c;
    std::shared_ptr<const CNode> tail;
  };
  struct Config {
    Term term;
    Oracle oracle;
    std::size_t vars = 0;
    std::size_t steps = 0;
    std::shared_ptr<const CNode> constraints;
  };

  std::optional<PathResult> advance(Config cfg);

  std::size_t budget_;
  std::deque<Config> queue_;
  std::size_t configs_explored_ = 0;
};

// Box over the sample variables (dimension = var_count), a subset of [0,1]^m.
using VarBox = std::vector<Interval>;

enum class BoxClass { Inside, Outside, Straddle };

// Interval evaluation of a symbolic value over a box.
Interval eval_sym(const Term& v, const VarBox& box);

// Affine view c0 + sum c_i * alpha_i of a symbolic value, when the value is
// built from linear primitives only.
struct AffineForm {
  Rat constant;
  std::vector<std::pair<std::size_t, Rat>> coeffs;  // sorted by variable
  bool is_constant() const { return coeffs.empty(); }
};
std::optional<AffineForm> affine_of(const Term& v);

// Classifies a box against a constraint set: Inside iff every constraint
// certainly holds on the whole box, Outside iff some constraint fails on all
// of it (up to a null boundary set for affine values), else Straddle.
BoxClass check_box(const ConstraintSet& cs, const VarBox& box);

}  // namespace spcf
