#pragma once

#include <optional>
#include <vector>

#include "spcf/symexec.hpp"

namespace spcf {

// Convex polytope { x | Ax <= b } over [0,1]^dim; the unit-box rows are
// always part of `rows`.
struct Polytope {
  std::size_t dim = 0;
  std::vector<std::vector<Rat>> rows;
  std::vector<Rat> rhs;
};

// Unit-box polytope in `dim` dimensions (2*dim rows).
Polytope unit_box_polytope(std::size_t dim);

// Adds a row sum(coeffs * x) <= b.
void add_halfspace(Polytope& p, std::vector<Rat> coeffs, Rat b);

// Converts a constraint set whose values are all affine (linear primitives
// only) into a polytope over var_count dimensions; strict inequalities are
// relaxed to their closures, which leaves the Lebesgue measure unchanged.
// Returns nullopt if any opaque primitive occurs.
std::optional<Polytope> linearize(const ConstraintSet& cs);

// Exact Lebesgue volume by recursive dimension reduction over the faces;
// 0 for empty or lower-dimensional input. Pure rational arithmetic.
Rat volume_exact(const Polytope& p);

struct MeasureEstimate {
  Rat lower;
  Rat upper;
  MeasureEstimate() : lower(0), upper(1) {}
  MeasureEstimate(Rat lo, Rat hi) : lower(std::move(lo)), upper(std::move(hi)) {}
  Rat gap() const { return upper - lower; }
};

struct SweepOptions {
  Rat target_gap = Rat(1, 1 << 20);
  std::size_t max_splits = 200000;
  bool collect_boxes = false;
};

struct SweepResult {
  MeasureEstimate estimate;
  std::size_t splits = 0;
  std::vector<VarBox> inside;  // filled when collect_boxes is set
};

// Box sweep over [0,1]^var_count: certified lower/upper bounds on the
// measure of Sat(cs). Straddling boxes split in half along their longest
// constrained dimension (ties: lowest index) until the gap target or the
// split budget is reached.
SweepResult sweep_measure(const ConstraintSet& cs, const SweepOptions& opts = {});

// Dispatch: exact volume when the constraints are linear (lower == upper),
// else the sweep with default options. Both routes factor the constraint set
// through the connected components of its shared-variable graph.
MeasureEstimate measure(const ConstraintSet& cs, const SweepOptions& sweep_opts = {});

// Connected components of the shared-variable graph; each component is a
// ConstraintSet over the original variable indices.
std::vector<ConstraintSet> split_components(const ConstraintSet& cs);

}  // namespace spcf
