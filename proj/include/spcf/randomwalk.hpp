#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spcf/rational.hpp"

namespace spcf {

// Sub-pmf on the naturals: distribution of recursive-call counts.
struct CountingDist {
  std::map<std::size_t, Rat> mass;

  Rat total() const {
    Rat t(0);
    for (const auto& [n, w] : mass) t += w;
    return t;
  }
};

// Sub-pmf on the integers: relative change of the pending-call count per
// resolution step; support of a shifted counting distribution is >= -1.
struct StepDist {
  std::map<long, Rat> mass;

  Rat total() const {
    Rat t(0);
    for (const auto& [z, w] : mass) t += w;
    return t;
  }
  Rat drift() const {
    Rat d(0);
    for (const auto& [z, w] : mass) d += w * z;
    return d;
  }
};

// Drops zero-weight entries.
CountingDist normalize(const CountingDist& s);
StepDist normalize(const StepDist& s);

// s_bar(z) = s(z+1): resolving a call that spawns n new calls changes the
// number of pending calls by n-1.
StepDist shift(const CountingDist& s);

struct AstDecision {
  bool ast = false;
  std::string reason;  // violated condition when not AST
  Rat sum;
  Rat drift;
  bool is_delta_zero = false;
};

// The random walk on the naturals driven by s, truncated at 0, reaches 0
// almost surely iff the mass sums to one, s != delta_0, and the drift is
// nonpositive. Linear in the support size.
AstDecision is_ast(const StepDist& s);

// Cumulative-dominance order: s <= t iff the cumulative weight of s never
// exceeds that of t.
bool leq(const CountingDist& s, const CountingDist& t);

// A finite family of step distributions that are each absorbing is uniformly
// absorbing, so the family verdict is the conjunction.
bool uniform_ast(const std::vector<CountingDist>& family);

// rank * (1 - epsilon) <= 1 suffices for AST when every unfolding avoids
// recursion with probability at least epsilon.
bool era_corollary(std::size_t rank, const Rat& epsilon);

// Monte-Carlo absorption frequency of the truncated walk (validation only).
double simulate(const StepDist& s, std::size_t start, std::size_t max_steps, std::size_t runs,
                std::uint64_t seed);

std::string counting_to_string(const CountingDist& s);
std::string step_to_string(const StepDist& s);

}  // namespace spcf
