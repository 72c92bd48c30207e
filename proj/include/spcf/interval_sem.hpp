#pragma once

#include <cstdint>
#include <string>

#include "spcf/interval.hpp"
#include "spcf/semantics.hpp"
#include "spcf/term.hpp"

namespace spcf {

// Replaces every standard numeral r with the point interval [r,r].
Term embed(const Term& t);

// Branch decision for a guard interval. Left fires when hi <= 0. Right fires
// when lo >= 0 (and not hi <= 0): the boundary point goes right, a
// measure-zero deviation that lets closed boxes tile strict branch
// conditions exactly. Straddle when lo < 0 < hi.
enum class GuardSide { Left, Right, Straddle };
GuardSide guard_side(const Interval& g);

struct IStepOutcome {
  enum Kind { Stepped, IsValue, Indeterminate, Stuck, TraceEmpty } kind = Stuck;
  Term next;
  bool consumed = false;
  std::string reason;
};

// One interval reduction step; `head` supplies the next trace interval.
IStepOutcome step_interval(const Term& t, const Interval* head);

enum class IRunStatus { Terminates, Indeterminate, Stuck, Budget };

struct IRunResult {
  IRunStatus status = IRunStatus::Stuck;
  Term result;
  std::size_t steps = 0;
  std::size_t consumed = 0;
  std::string reason;
};

// Runs to a value; Terminates requires the interval trace fully consumed.
IRunResult run_interval(const Term& t, const IntervalTrace& trace, std::size_t budget = 1000000);

struct RefinementReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::size_t expected_steps = 0;
  bool trace_terminates = false;
  std::string detail;
};

// Soundness probe: checks that `samples` random standard traces refining the
// interval trace all terminate for `t` (a standard term) in exactly the step
// count of the interval run. Sampled points are interior, so boundary
// behaviour is never exercised.
RefinementReport refinement_check(const Term& t, const IntervalTrace& trace, std::size_t samples,
                                  std::uint64_t seed = 1);

}  // namespace spcf
