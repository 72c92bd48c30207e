#include "spcf/interval.hpp"

#include <algorithm>
#include <map>

namespace spcf {

std::string interval_to_string(const Interval& iv) {
  return "[" + rat_to_string(iv.lo) + "," + rat_to_string(iv.hi) + "]";
}

std::string trace_to_string(const IntervalTrace& tr) {
  std::string out;
  for (const auto& iv : tr.parts) out += interval_to_string(iv);
  return out.empty() ? "eps" : out;
}

bool compatible(const IntervalTrace& a, const IntervalTrace& b) {
  if (a.size() != b.size()) return true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (almost_disjoint(a.parts[i], b.parts[i])) return true;
  }
  return false;
}

bool strongly_compatible(const IntervalTrace& a, const IntervalTrace& b) {
  std::size_t i = 0;
  for (; i < a.size() && i < b.size(); ++i) {
    if (a.parts[i] == b.parts[i]) continue;
    return almost_disjoint(a.parts[i], b.parts[i]);
  }
  // One is a prefix of the other (possibly equal up to here); the shorter one
  // ended, which the rules allow.
  return true;
}

namespace {

struct RatLess {
  bool operator()(const Rat& a, const Rat& b) const { return a < b; }
};

std::vector<IntervalTrace> split_rec(std::vector<IntervalTrace> traces) {
  if (traces.size() <= 1) return traces;
  bool all_empty = true;
  for (const auto& t : traces) {
    if (!t.empty()) all_empty = false;
  }
  if (all_empty) return traces;

  // Partition the first position at every endpoint occurring there.
  std::vector<Rat> cuts;
  for (const auto& t : traces) {
    if (t.empty()) continue;
    cuts.push_back(t.parts[0].lo);
    cuts.push_back(t.parts[0].hi);
  }
  std::sort(cuts.begin(), cuts.end(), RatLess{});
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Interval> pieces;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) pieces.emplace_back(cuts[i], cuts[i + 1]);
  for (const auto& t : traces) {
    if (!t.empty() && t.parts[0].is_point()) pieces.push_back(t.parts[0]);
  }

  std::vector<IntervalTrace> empties;
  std::map<std::pair<std::string, std::string>, std::pair<Interval, std::vector<IntervalTrace>>> groups;
  for (const auto& t : traces) {
    if (t.empty()) {
      empties.push_back(t);
      continue;
    }
    const Interval& head = t.parts[0];
    for (const auto& piece : pieces) {
      bool inside = head.lo <= piece.lo && piece.hi <= head.hi;
      if (!inside) continue;
      if (piece.is_point() && !head.is_point()) continue;  // zero-width slivers only for point heads
      IntervalTrace tail;
      tail.parts.assign(t.parts.begin() + 1, t.parts.end());
      auto key = std::make_pair(rat_to_string(piece.lo), rat_to_string(piece.hi));
      auto& slot = groups[key];
      slot.first = piece;
      slot.second.push_back(std::move(tail));
    }
  }

  std::vector<IntervalTrace> out = std::move(empties);
  for (auto& [key, slot] : groups) {
    (void)key;
    std::vector<IntervalTrace> tails = split_rec(std::move(slot.second));
    for (auto& tail : tails) {
      IntervalTrace full;
      full.parts.reserve(tail.size() + 1);
      full.parts.push_back(slot.first);
      full.parts.insert(full.parts.end(), tail.parts.begin(), tail.parts.end());
      out.push_back(std::move(full));
    }
  }
  return out;
}

}  // namespace

std::vector<IntervalTrace> strong_split(const std::vector<IntervalTrace>& traces) {
  return split_rec(traces);
}

}  // namespace spcf
