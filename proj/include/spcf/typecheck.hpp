#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "spcf/term.hpp"

namespace spcf {

// Simple types: R | R^T | a -> b. R^T only occurs in the progress system.
struct SimpleType;
using TypePtr = std::shared_ptr<const SimpleType>;

struct SimpleType {
  enum Kind { Real, RealTop, Arrow } kind;
  TypePtr dom, cod;
};

TypePtr ty_real();
TypePtr ty_real_top();
TypePtr ty_arrow(TypePtr dom, TypePtr cod);
bool type_equal(const TypePtr& a, const TypePtr& b);
std::string type_to_string(const TypePtr& t);

struct TypeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Infers the unique simple type (numerals, sample : R; score(M) : R for
// M : R). Type variables left unconstrained default to R. Analysis-only
// constructors type as: alpha_j, star, unknown-arg : R, boxed f : R,
// rec-hole : R -> R.
TypePtr typecheck(const Term& t, const std::map<std::string, TypePtr>& env = {});

// Decides derivability of `body : R^T` in the restricted system where the
// recursion hole has type R^T -> R^T and guards/scores demand plain R, so a
// `true` verdict guarantees recursive outcomes never reach a conditional
// guard or a score argument. `body` is a fixpoint body with the recursion
// hole substituted for the recursive function.
bool progress_check(const Term& body);

}  // namespace spcf
