#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spcf/interval.hpp"
#include "spcf/term.hpp"

namespace spcf {

// Set types over interval terms:
//   alpha ::= [a,b] | sigma -> A      sigma ::= {A_1, ..., A_n}
//   A ::= << (alpha_1, p_1, tau_1), ... >>
// where each p_i is an interval trace and tau_i a step count.
struct IType;
using ITypePtr = std::shared_ptr<const IType>;

struct SetTypeElem;
using SetType = std::vector<SetTypeElem>;
using Intersection = std::vector<SetType>;

struct SetTypeElem {
  ITypePtr type;
  IntervalTrace trace;
  std::size_t count = 0;
};

struct IType {
  bool is_interval = true;
  Interval iv;       // when is_interval
  Intersection dom;  // when arrow
  SetType cod;       // when arrow
};

ITypePtr itype_interval(const Interval& iv);
ITypePtr itype_arrow(Intersection dom, SetType cod);

bool itype_equal(const ITypePtr& a, const ITypePtr& b);
bool settype_equal(const SetType& a, const SetType& b);  // as multisets
bool intersection_contains(const Intersection& sigma, const SetType& a);

// Prepend a trace and add a count to every element.
SetType shift(const SetType& a, const IntervalTrace& prefix, std::size_t add);

Rat omega(const SetType& a);
Rat expectation(const SetType& a);

std::string settype_to_string(const SetType& a);

// Derivations.
enum class DRule { Var, Num, Sample, Fix, App, Empty, Abs, Score, If, Prim };

struct DerivationNode;
using Derivation = std::shared_ptr<const DerivationNode>;

struct DerivationNode {
  DRule rule;
  Term subject;  // interval term
  SetType conclusion;
  std::vector<Derivation> premises;
};

struct CheckReport {
  bool ok = true;
  std::string error;  // first offending node and rule
};

// Rule-by-rule verification of a derivation; binder contexts are threaded
// from Abs/Fix nodes down to Var leaves.
CheckReport check_derivation(const Derivation& d);

struct SynthesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Builds a checkable derivation for embed(t) whose root set type lists
// exactly the given traces with their step counts. The traces must be
// pairwise strongly compatible and terminating for embed(t).
Derivation synthesize(const Term& t, const std::vector<IntervalTrace>& boxes);

std::string derivation_to_json(const Derivation& d);

}  // namespace spcf
