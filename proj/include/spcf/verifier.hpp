#pragma once

#include <cstdint>
#include <string>

#include "spcf/exectree.hpp"
#include "spcf/randomwalk.hpp"
#include "spcf/term.hpp"

namespace spcf {

struct AstVerdict {
  enum class Decision { Ast, Unknown } decision = Decision::Unknown;
  std::string reason;  // failing stage or violated condition when Unknown
  bool structural_failure = false;  // precondition failure, not an analysis verdict
  PApprox approx;
  AstDecision checks;
  bool independence = false;
  std::size_t rank = 0;
  std::uint64_t elapsed_ms = 0;
};

// End-to-end verification that the program's unique fixpoint is almost
// surely terminating on every actual argument: execution tree, sufficient
// independence, worst-case counting distribution, random-walk decision.
// Unknown is not a refutation.
AstVerdict verify_ast(const Term& program);

// The unique fixpoint of a program (the program itself if it is one);
// throws TreeError if there is none or more than one.
Term find_fixpoint(const Term& program);

}  // namespace spcf
