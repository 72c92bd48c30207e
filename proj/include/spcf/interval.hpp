#pragma once

#include <string>
#include <vector>

#include "spcf/rational.hpp"

namespace spcf {

// Closed interval with rational endpoints, lo <= hi.
struct Interval {
  Rat lo;
  Rat hi;

  Interval() : lo(0), hi(0) {}
  Interval(Rat l, Rat h) : lo(std::move(l)), hi(std::move(h)) {}

  bool is_point() const { return lo == hi; }
  Rat width() const { return hi - lo; }
  bool contains(const Rat& r) const { return lo <= r && r <= hi; }

  bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
  bool operator!=(const Interval& o) const { return !(*this == o); }
};

// Intersection contains at most one point.
inline bool almost_disjoint(const Interval& a, const Interval& b) {
  return a.hi <= b.lo || b.hi <= a.lo;
}

std::string interval_to_string(const Interval& iv);

// A finite sequence of subintervals of [0,1]; its weight is the product of
// the widths.
struct IntervalTrace {
  std::vector<Interval> parts;

  std::size_t size() const { return parts.size(); }
  bool empty() const { return parts.empty(); }
  Rat weight() const {
    Rat w(1);
    for (const auto& iv : parts) w *= iv.width();
    return w;
  }
  bool operator==(const IntervalTrace& o) const { return parts == o.parts; }
};

std::string trace_to_string(const IntervalTrace& tr);

// Disjointness of the denoted sets of standard traces: different lengths, or
// some position with almost-disjoint intervals.
bool compatible(const IntervalTrace& a, const IntervalTrace& b);

// Identical or almost disjoint at the first differing position, recursively.
bool strongly_compatible(const IntervalTrace& a, const IntervalTrace& b);

// Refines a pairwise compatible family into a pairwise strongly compatible
// one denoting the same set of standard traces; total weight is preserved
// exactly.
std::vector<IntervalTrace> strong_split(const std::vector<IntervalTrace>& traces);

}  // namespace spcf
