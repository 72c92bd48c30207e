#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spcf/interval.hpp"
#include "spcf/rational.hpp"

namespace spcf {

// Primitive operations. Linear ones (add/sub/neg/mulc) admit exact symbolic
// treatment; opaque ones (min/max/sig) only expose a monotone interval map.
enum class PrimKind { Linear, Opaque };

struct PrimOp {
  std::string name;
  int arity = 0;
  PrimKind kind = PrimKind::Linear;
  Rat scale;  // multiplier for mulc

  bool operator==(const PrimOp& o) const {
    return name == o.name && arity == o.arity && scale == o.scale;
  }
};

PrimOp prim_add();
PrimOp prim_sub();
PrimOp prim_neg();
PrimOp prim_mulc(const Rat& q);
PrimOp prim_min();
PrimOp prim_max();
PrimOp prim_sig();

// Interval extension: image of the box under the primitive, with rational
// endpoints. Opaque primitives round outward (2^-64), so the result may
// slightly over-approximate the exact image; it always contains it.
Interval prim_image(const PrimOp& f, const std::vector<Interval>& args);

// Point evaluation. Exact for linear primitives and min/max; sig evaluates to
// a rational within 2^-64 of the true value (used only by sampling-based
// validators, never on a certified path).
Rat prim_eval(const PrimOp& f, const std::vector<Rat>& args);

enum class Tag {
  Var,
  Num,
  IntervalNum,
  Lam,
  Fix,
  App,
  If,
  Prim,
  Sample,
  Score,
  // analysis-only constructors
  SampleVar,   // alpha_j
  BoxedPrim,   // postponed primitive over symbolic values
  StarValue,   // unknown recursive outcome
  UnknownArg,  // unknown actual argument of the fixpoint under analysis
  HoleMu,      // recursive call placeholder
};

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct TermNode {
  Tag tag;
  std::string name;         // Var; binder for Lam; argument binder for Fix
  std::string fun_name;     // recursion binder for Fix
  Interval num;             // Num (point) and IntervalNum
  std::size_t sample_index = 0;  // SampleVar
  PrimOp prim;              // Prim / BoxedPrim
  std::vector<Term> kids;   // children, constructor-specific order
};

// Constructors.
Term mk_var(std::string name);
Term mk_num(const Rat& r);
Term mk_interval_num(const Rat& lo, const Rat& hi);
Term mk_lam(std::string x, Term body);
Term mk_fix(std::string f, std::string x, Term body);
Term mk_app(Term fn, Term arg);
Term mk_if(Term guard, Term then_t, Term else_t);
Term mk_prim(PrimOp f, std::vector<Term> args);
Term mk_sample();
Term mk_score(Term arg);
Term mk_sample_var(std::size_t index);
Term mk_boxed_prim(PrimOp f, std::vector<Term> args);
Term mk_star();
Term mk_unknown_arg();
Term mk_hole_mu();

bool is_value(const Term& t);
bool is_numeral(const Term& t);  // Num or IntervalNum
bool term_equal(const Term& a, const Term& b);
bool contains_tag(const Term& t, Tag tag);
std::size_t count_tag(const Term& t, Tag tag);

// Capture-avoiding simultaneous substitution of free variables.
Term substitute(const Term& t, const std::map<std::string, Term>& bindings);

// Canonical printing; parse(print(t)) == t for parseable terms.
std::string term_to_string(const Term& t);

}  // namespace spcf
