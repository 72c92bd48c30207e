#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>

namespace spcf {

// Exact rational arithmetic. All analysis results are rationals; no
// floating point is used on any certified path.
using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  Rat q(num, den);
  q.canonicalize();
  return q;
}

// Parses "p/q", "p", or a decimal such as "0.65" (read exactly, e.g. 13/20).
std::optional<Rat> rat_from_string(const std::string& text);

// "p/q" (or just "p" for integers).
std::string rat_to_string(const Rat& q);

// First `digits` decimal digits after the point, truncated toward zero,
// e.g. 1048575/1048576 -> "0.9999990463" with digits = 10.
std::string rat_to_decimal(const Rat& q, int digits = 10);

// Nearest dyadic k/2^bits below (resp. above) q; used to round opaque
// primitive bounds outward without dragging huge denominators around.
Rat dyadic_floor(const Rat& q, unsigned bits);
Rat dyadic_ceil(const Rat& q, unsigned bits);

inline double rat_to_double(const Rat& q) { return q.get_d(); }

}  // namespace spcf
