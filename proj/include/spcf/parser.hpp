#pragma once

#include <stdexcept>
#include <string>

#include "spcf/term.hpp"

namespace spcf {

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
        line(line_),
        col(col_) {}
};

// Parses the concrete syntax and desugars:
//   M (+ q) N      -> if sample - q then M else N      ((+) means q = 1/2)
//   let x = M in N -> (\x. N) M
//   a <= b         -> a - b        (guard-style comparison)
//   f^k(e)         -> f (f (... (e)))
// Comments run from '#' to end of line.
Term parse(const std::string& source);

Term parse_file(const std::string& path);

}  // namespace spcf
