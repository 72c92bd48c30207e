#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spcf/interval.hpp"
#include "spcf/measure.hpp"
#include "spcf/symexec.hpp"

namespace spcf {

struct LowerBoundConfig {
  std::size_t max_depth = 100;        // symbolic step budget per path
  Rat per_path_gap = Rat(1, 1 << 20);  // sweep gap for non-linear paths
  std::size_t max_splits_per_path = 200000;
  std::uint64_t time_budget_ms = 0;  // 0: no limit
  bool emit_boxes = false;           // certificate mode: box-backed accounting
  unsigned jobs = 1;
};

struct CertificateEntry {
  IntervalTrace trace;
  std::size_t steps = 0;
};

struct LowerBoundResult {
  Rat lb_probability = Rat(0);
  Rat lb_expected_steps = Rat(0);
  std::size_t oracles_terminated = 0;
  std::size_t oracles_explored = 0;
  std::size_t depth = 0;
  std::uint64_t elapsed_ms = 0;
  std::vector<CertificateEntry> certificate;  // filled in certificate mode
};

// Certified lower bounds on the probability of termination and (for
// almost-surely terminating programs) the expected number of steps:
// enumerates terminating branch oracles breadth-first up to the step depth
// and accumulates certified measure lower bounds per path. In certificate
// mode every path is swept into boxes and the reported bound is exactly the
// weight of the emitted, pairwise compatible box set.
LowerBoundResult lower_bound(const Term& t, const LowerBoundConfig& cfg = {});

// JSON serialization of the certificate (array of {trace, steps}).
std::string certificate_to_json(const std::vector<CertificateEntry>& cert);
std::vector<CertificateEntry> certificate_from_json(const std::string& text);

}  // namespace spcf
