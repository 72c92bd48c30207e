#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spcf/term.hpp"

namespace spcf {

// A standard trace: the fixed sequence of probabilistic outcomes, each in
// [0,1], consumed left to right by sample.
using StdTrace = std::vector<Rat>;

enum class RunStatus { Value, Stuck, TraceExhausted, BudgetExceeded };

struct RunResult {
  RunStatus status = RunStatus::Stuck;
  Term result;               // final term on Value
  std::size_t steps = 0;     // redex firings performed
  std::size_t consumed = 0;  // samples drawn
  std::string stuck_reason;
};

struct CountResult {
  RunStatus status = RunStatus::Stuck;
  Term result;
  std::size_t steps = 0;
  std::size_t consumed = 0;
  std::size_t calls = 0;  // recursion-hole firings
  std::string stuck_reason;
};

// One small-step outcome; `consumed` tells whether the trace head was used.
struct StepOutcome {
  enum Kind { Stepped, IsValue, Stuck, TraceEmpty } kind = Stuck;
  Term next;
  bool consumed = false;
  std::string reason;
};

StepOutcome step_cbn(const Term& t, const Rat* head);
StepOutcome step_cbv(const Term& t, const Rat* head);

// Call-by-name / call-by-value runs. Value status requires the whole trace
// to be consumed; a value with leftover trace reports Stuck.
RunResult run_cbn(const Term& t, const StdTrace& trace, std::size_t budget = 1000000);
RunResult run_cbv(const Term& t, const StdTrace& trace, std::size_t budget = 1000000);

// Counting run: call-by-value stepping where applying the recursion hole to
// a value yields the unknown numeral and bumps the call counter. The unknown
// flows through primitives but sticks in guards and score.
CountResult run_counting(const Term& body, const StdTrace& trace, std::size_t budget = 1000000);

}  // namespace spcf
