#include "spcf/randomwalk.hpp"

#include <algorithm>
#include <random>

namespace spcf {

CountingDist normalize(const CountingDist& s) {
  CountingDist out;
  for (const auto& [n, w] : s.mass)
    if (w != 0) out.mass[n] = w;
  return out;
}

StepDist normalize(const StepDist& s) {
  StepDist out;
  for (const auto& [z, w] : s.mass)
    if (w != 0) out.mass[z] = w;
  return out;
}

StepDist shift(const CountingDist& s) {
  StepDist out;
  for (const auto& [n, w] : s.mass) {
    if (w != 0) out.mass[static_cast<long>(n) - 1] = w;
  }
  return out;
}

AstDecision is_ast(const StepDist& s) {
  AstDecision d;
  StepDist n = normalize(s);
  d.sum = n.total();
  d.drift = n.drift();
  d.is_delta_zero = n.mass.size() == 1 && n.mass.count(0) && n.mass.at(0) == 1;
  if (d.sum != 1) {
    d.reason = "mass deficit " + rat_to_string(Rat(1) - d.sum) + " escapes to failure";
    return d;
  }
  if (d.is_delta_zero) {
    d.reason = "step distribution is the point mass at 0";
    return d;
  }
  if (d.drift > 0) {
    d.reason = "positive drift " + rat_to_string(d.drift);
    return d;
  }
  d.ast = true;
  return d;
}

bool leq(const CountingDist& s, const CountingDist& t) {
  // compare cumulative sums at every support point of either side
  std::vector<std::size_t> points;
  for (const auto& [n, w] : s.mass) {
    (void)w;
    points.push_back(n);
  }
  for (const auto& [n, w] : t.mass) {
    (void)w;
    points.push_back(n);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  Rat cs(0), ct(0);
  for (std::size_t n : points) {
    auto is = s.mass.find(n);
    if (is != s.mass.end()) cs += is->second;
    auto it = t.mass.find(n);
    if (it != t.mass.end()) ct += it->second;
    if (cs > ct) return false;
  }
  return true;
}

bool uniform_ast(const std::vector<CountingDist>& family) {
  for (const auto& s : family) {
    if (!is_ast(shift(s)).ast) return false;
  }
  return true;
}

bool era_corollary(std::size_t rank, const Rat& epsilon) {
  return Rat(static_cast<long>(rank)) * (Rat(1) - epsilon) <= 1;
}

double simulate(const StepDist& s, std::size_t start, std::size_t max_steps, std::size_t runs,
                std::uint64_t seed) {
  // cumulative table in doubles; the residual mass moves to the failure state
  std::vector<std::pair<double, long>> table;
  double acc = 0;
  for (const auto& [z, w] : s.mass) {
    acc += rat_to_double(w);
    table.emplace_back(acc, z);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t absorbed = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    long pos = static_cast<long>(start);
    for (std::size_t step = 0; step < max_steps && pos > 0; ++step) {
      double u = unif(rng);
      long delta = 0;
      bool fail = true;
      for (const auto& [c, z] : table) {
        if (u <= c) {
          delta = z;
          fail = false;
          break;
        }
      }
      if (fail) {
        pos = -1;  // failure state, never absorbed at 0
        break;
      }
      pos += delta;
      if (pos < 0) pos = 0;
    }
    if (pos == 0) ++absorbed;
  }
  return static_cast<double>(absorbed) / static_cast<double>(runs);
}

std::string counting_to_string(const CountingDist& s) {
  if (s.mass.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [n, w] : s.mass) {
    if (!first) out += " + ";
    first = false;
    out += rat_to_string(w) + "*d" + std::to_string(n);
  }
  return out;
}

std::string step_to_string(const StepDist& s) {
  if (s.mass.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [z, w] : s.mass) {
    if (!first) out += " + ";
    first = false;
    out += rat_to_string(w) + "*d(" + std::to_string(z) + ")";
  }
  return out;
}

}  // namespace spcf
