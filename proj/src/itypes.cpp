#include "spcf/itypes.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "spcf/interval_sem.hpp"

#include <nlohmann/json.hpp>

namespace spcf {

ITypePtr itype_interval(const Interval& iv) {
  auto t = std::make_shared<IType>();
  t->is_interval = true;
  t->iv = iv;
  return t;
}

ITypePtr itype_arrow(Intersection dom, SetType cod) {
  auto t = std::make_shared<IType>();
  t->is_interval = false;
  t->dom = std::move(dom);
  t->cod = std::move(cod);
  return t;
}

namespace {

std::string itype_key(const ITypePtr& t);

std::string elem_key(const SetTypeElem& e) {
  return itype_key(e.type) + "@" + trace_to_string(e.trace) + "#" + std::to_string(e.count);
}

std::string settype_key(const SetType& a) {
  std::vector<std::string> ks;
  ks.reserve(a.size());
  for (const auto& e : a) ks.push_back(elem_key(e));
  std::sort(ks.begin(), ks.end());
  std::string out = "<<";
  for (auto& k : ks) {
    out += k;
    out.push_back(';');
  }
  out += ">>";
  return out;
}

std::string itype_key(const ITypePtr& t) {
  if (t->is_interval) return interval_to_string(t->iv);
  std::vector<std::string> ds;
  ds.reserve(t->dom.size());
  for (const auto& a : t->dom) ds.push_back(settype_key(a));
  std::sort(ds.begin(), ds.end());
  std::string out = "{";
  for (auto& d : ds) {
    out += d;
    out.push_back(',');
  }
  out += "}->";
  out += settype_key(t->cod);
  return out;
}

}  // namespace

bool itype_equal(const ITypePtr& a, const ITypePtr& b) { return itype_key(a) == itype_key(b); }

bool settype_equal(const SetType& a, const SetType& b) {
  if (a.size() != b.size()) return false;
  return settype_key(a) == settype_key(b);
}

bool intersection_contains(const Intersection& sigma, const SetType& a) {
  for (const auto& m : sigma)
    if (settype_equal(m, a)) return true;
  return false;
}

SetType shift(const SetType& a, const IntervalTrace& prefix, std::size_t add) {
  SetType out;
  out.reserve(a.size());
  for (const auto& e : a) {
    SetTypeElem n = e;
    IntervalTrace t;
    t.parts = prefix.parts;
    t.parts.insert(t.parts.end(), e.trace.parts.begin(), e.trace.parts.end());
    n.trace = std::move(t);
    n.count = e.count + add;
    out.push_back(std::move(n));
  }
  return out;
}

Rat omega(const SetType& a) {
  Rat w(0);
  for (const auto& e : a) w += e.trace.weight();
  return w;
}

Rat expectation(const SetType& a) {
  Rat w(0);
  for (const auto& e : a) w += e.trace.weight() * static_cast<long>(e.count);
  return w;
}

std::string settype_to_string(const SetType& a) {
  std::string out = "<<";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out += ", ";
    out += "(";
    out += a[i].type->is_interval ? interval_to_string(a[i].type->iv) : std::string("arrow");
    out += ", " + trace_to_string(a[i].trace) + ", " + std::to_string(a[i].count) + ")";
  }
  out += ">>";
  return out;
}

// ---------------------------------------------------------------------------
// Checking

namespace {

using Env = std::map<std::string, Intersection>;

struct Checker {
  CheckReport report;

  bool fail(const DerivationNode& n, const std::string& msg) {
    if (report.ok) {
      report.ok = false;
      report.error = msg + " [rule " + std::to_string(static_cast<int>(n.rule)) + " at " +
                     term_to_string(n.subject) + "]";
    }
    return false;
  }

  bool check(const Derivation& d, const Env& env);
};

bool interval_left(const Interval& iv) { return iv.hi <= 0; }
bool interval_right(const Interval& iv) { return !interval_left(iv) && iv.lo >= 0; }

bool Checker::check(const Derivation& d, const Env& env) {
  const DerivationNode& n = *d;
  switch (n.rule) {
    case DRule::Empty:
      if (!n.premises.empty()) return fail(n, "empty rule takes no premises");
      if (!n.conclusion.empty()) return fail(n, "empty rule concludes <<>>");
      return true;

    case DRule::Var: {
      if (n.subject->tag != Tag::Var) return fail(n, "var rule on non-variable");
      auto it = env.find(n.subject->name);
      if (it == env.end()) return fail(n, "unbound variable " + n.subject->name);
      if (!intersection_contains(it->second, n.conclusion))
        return fail(n, "variable type not in its intersection");
      return true;
    }

    case DRule::Num: {
      if (n.subject->tag != Tag::IntervalNum && n.subject->tag != Tag::Num)
        return fail(n, "num rule on non-numeral");
      SetType want{SetTypeElem{itype_interval(n.subject->num), IntervalTrace{}, 0}};
      if (!settype_equal(n.conclusion, want)) return fail(n, "num conclusion mismatch");
      return true;
    }

    case DRule::Sample: {
      if (n.subject->tag != Tag::Sample) return fail(n, "sample rule on non-sample");
      for (const auto& e : n.conclusion) {
        if (!e.type->is_interval) return fail(n, "sample element must be an interval");
        if (e.count != 1) return fail(n, "sample element count must be 1");
        if (e.trace.size() != 1 || e.trace.parts[0] != e.type->iv)
          return fail(n, "sample trace must be the sampled interval");
      }
      for (std::size_t i = 0; i < n.conclusion.size(); ++i)
        for (std::size_t j = i + 1; j < n.conclusion.size(); ++j)
          if (!almost_disjoint(n.conclusion[i].type->iv, n.conclusion[j].type->iv))
            return fail(n, "sample intervals not almost disjoint");
      return true;
    }

    case DRule::Abs: {
      if (n.subject->tag != Tag::Lam) return fail(n, "abs rule on non-lambda");
      if (n.premises.size() != 1) return fail(n, "abs takes one premise");
      if (n.conclusion.size() != 1 || n.conclusion[0].type->is_interval ||
          !n.conclusion[0].trace.empty() || n.conclusion[0].count != 0)
        return fail(n, "abs concludes a single arrow at (eps, 0)");
      const auto& arrow = n.conclusion[0].type;
      const Derivation& body = n.premises[0];
      if (!term_equal(body->subject, n.subject->kids[0])) return fail(n, "abs premise subject mismatch");
      if (!settype_equal(body->conclusion, arrow->cod)) return fail(n, "abs body type mismatch");
      Env inner = env;
      inner[n.subject->name] = arrow->dom;
      return check(body, inner);
    }

    case DRule::Fix: {
      if (n.subject->tag != Tag::Fix) return fail(n, "fix rule on non-fixpoint");
      if (n.premises.empty()) return fail(n, "fix needs a body premise");
      if (n.conclusion.size() != 1 || n.conclusion[0].type->is_interval ||
          !n.conclusion[0].trace.empty() || n.conclusion[0].count != 0)
        return fail(n, "fix concludes a single arrow at (eps, 0)");
      const auto& arrow = n.conclusion[0].type;
      const Derivation& body = n.premises[0];
      if (!term_equal(body->subject, n.subject->kids[0])) return fail(n, "fix premise subject mismatch");
      if (!settype_equal(body->conclusion, arrow->cod)) return fail(n, "fix body type mismatch");
      // gamma: one self premise per member
      Intersection gamma;
      for (std::size_t i = 1; i < n.premises.size(); ++i) {
        const Derivation& self = n.premises[i];
        if (!term_equal(self->subject, n.subject)) return fail(n, "fix self premise subject mismatch");
        gamma.push_back(self->conclusion);
        if (!check(self, env)) return false;
      }
      Env inner = env;
      inner[n.subject->name] = arrow->dom;
      inner[n.subject->fun_name] = gamma;
      return check(body, inner);
    }

    case DRule::App: {
      if (n.subject->tag != Tag::App) return fail(n, "app rule on non-application");
      if (n.premises.empty()) return fail(n, "app needs a function premise");
      const Derivation& fn = n.premises[0];
      if (!term_equal(fn->subject, n.subject->kids[0])) return fail(n, "app function subject mismatch");
      if (!check(fn, env)) return false;
      SetType want;
      std::size_t next = 1;
      for (const auto& e : fn->conclusion) {
        if (e.type->is_interval) return fail(n, "app over non-arrow element");
        for (const auto& member : e.type->dom) {
          if (next >= n.premises.size()) return fail(n, "app missing argument premise");
          const Derivation& arg = n.premises[next++];
          if (!term_equal(arg->subject, n.subject->kids[1])) return fail(n, "app argument subject mismatch");
          if (!settype_equal(arg->conclusion, member)) return fail(n, "app argument type mismatch");
          if (!check(arg, env)) return false;
        }
        SetType part = shift(e.type->cod, e.trace, e.count + 1);
        want.insert(want.end(), part.begin(), part.end());
      }
      if (next != n.premises.size()) return fail(n, "app has extra premises");
      if (!settype_equal(n.conclusion, want)) return fail(n, "app conclusion mismatch");
      return true;
    }

    case DRule::Score: {
      if (n.subject->tag != Tag::Score) return fail(n, "score rule on non-score");
      if (n.premises.size() != 1) return fail(n, "score takes one premise");
      const Derivation& arg = n.premises[0];
      if (!term_equal(arg->subject, n.subject->kids[0])) return fail(n, "score premise subject mismatch");
      SetType want;
      for (const auto& e : arg->conclusion) {
        if (!e.type->is_interval) return fail(n, "score of non-interval element");
        if (e.type->iv.lo >= 0) {
          SetTypeElem ne = e;
          ne.count = e.count + 1;
          want.push_back(std::move(ne));
        }
      }
      if (!settype_equal(n.conclusion, want)) return fail(n, "score conclusion mismatch");
      return check(arg, env);
    }

    case DRule::If: {
      if (n.subject->tag != Tag::If) return fail(n, "if rule on non-conditional");
      if (n.premises.empty()) return fail(n, "if needs a guard premise");
      const Derivation& guard = n.premises[0];
      if (!term_equal(guard->subject, n.subject->kids[0])) return fail(n, "if guard subject mismatch");
      if (!check(guard, env)) return false;
      std::vector<const SetTypeElem*> lefts, rights;
      for (const auto& e : guard->conclusion) {
        if (!e.type->is_interval) return fail(n, "if guard element must be an interval");
        if (interval_left(e.type->iv))
          lefts.push_back(&e);
        else if (interval_right(e.type->iv))
          rights.push_back(&e);
        else
          return fail(n, "if guard element straddles 0");
      }
      if (n.premises.size() != 1 + lefts.size() + rights.size())
        return fail(n, "if premise count mismatch");
      SetType want;
      std::size_t next = 1;
      for (const auto* e : lefts) {
        const Derivation& br = n.premises[next++];
        if (!term_equal(br->subject, n.subject->kids[1])) return fail(n, "if left branch subject mismatch");
        if (!check(br, env)) return false;
        SetType part = shift(br->conclusion, e->trace, e->count + 1);
        want.insert(want.end(), part.begin(), part.end());
      }
      for (const auto* e : rights) {
        const Derivation& br = n.premises[next++];
        if (!term_equal(br->subject, n.subject->kids[2])) return fail(n, "if right branch subject mismatch");
        if (!check(br, env)) return false;
        SetType part = shift(br->conclusion, e->trace, e->count + 1);
        want.insert(want.end(), part.begin(), part.end());
      }
      if (!settype_equal(n.conclusion, want)) return fail(n, "if conclusion mismatch");
      return true;
    }

    case DRule::Prim: {
      if (n.subject->tag != Tag::Prim) return fail(n, "prim rule on non-primitive");
      const auto& kids = n.subject->kids;
      if (kids.size() == 1) {
        if (n.premises.size() != 1) return fail(n, "unary prim takes one premise");
        const Derivation& arg = n.premises[0];
        if (!term_equal(arg->subject, kids[0])) return fail(n, "prim argument subject mismatch");
        if (!check(arg, env)) return false;
        SetType want;
        for (const auto& e : arg->conclusion) {
          if (!e.type->is_interval) return fail(n, "prim argument must be an interval element");
          SetTypeElem ne;
          ne.type = itype_interval(prim_image(n.subject->prim, {e.type->iv}));
          ne.trace = e.trace;
          ne.count = e.count + 1;
          want.push_back(std::move(ne));
        }
        if (!settype_equal(n.conclusion, want)) return fail(n, "prim conclusion mismatch");
        return true;
      }
      if (kids.size() == 2) {
        if (n.premises.empty()) return fail(n, "binary prim needs premises");
        const Derivation& a1 = n.premises[0];
        if (!term_equal(a1->subject, kids[0])) return fail(n, "prim first argument subject mismatch");
        if (!check(a1, env)) return false;
        if (n.premises.size() != 1 + a1->conclusion.size()) return fail(n, "prim premise count mismatch");
        SetType want;
        for (std::size_t i = 0; i < a1->conclusion.size(); ++i) {
          const auto& e1 = a1->conclusion[i];
          if (!e1.type->is_interval) return fail(n, "prim argument must be an interval element");
          const Derivation& a2 = n.premises[1 + i];
          if (!term_equal(a2->subject, kids[1])) return fail(n, "prim second argument subject mismatch");
          if (!check(a2, env)) return false;
          for (const auto& e2 : a2->conclusion) {
            if (!e2.type->is_interval) return fail(n, "prim argument must be an interval element");
            SetTypeElem ne;
            ne.type = itype_interval(prim_image(n.subject->prim, {e1.type->iv, e2.type->iv}));
            IntervalTrace t = e1.trace;
            t.parts.insert(t.parts.end(), e2.trace.parts.begin(), e2.trace.parts.end());
            ne.trace = std::move(t);
            ne.count = e1.count + e2.count + 1;
            want.push_back(std::move(ne));
          }
        }
        if (!settype_equal(n.conclusion, want)) return fail(n, "prim conclusion mismatch");
        return true;
      }
      return fail(n, "prim rule supports arity 1 and 2");
    }
  }
  return fail(n, "unknown rule");
}

}  // namespace

CheckReport check_derivation(const Derivation& d) {
  Checker c;
  c.check(d, {});
  return c.report;
}

// ---------------------------------------------------------------------------
// Synthesis from strongly compatible terminating traces

namespace {

Derivation node(DRule rule, Term subject, SetType conclusion, std::vector<Derivation> premises) {
  auto n = std::make_shared<DerivationNode>();
  n->rule = rule;
  n->subject = std::move(subject);
  n->conclusion = std::move(conclusion);
  n->premises = std::move(premises);
  return n;
}

Derivation empty_node(Term subject) { return node(DRule::Empty, std::move(subject), {}, {}); }

Derivation value_leaf(const Term& v) {
  switch (v->tag) {
    case Tag::IntervalNum:
    case Tag::Num:
      return node(DRule::Num, v, SetType{SetTypeElem{itype_interval(v->num), IntervalTrace{}, 0}}, {});
    case Tag::Lam: {
      SetType concl{SetTypeElem{itype_arrow({}, {}), IntervalTrace{}, 0}};
      return node(DRule::Abs, v, std::move(concl), {empty_node(v->kids[0])});
    }
    case Tag::Fix: {
      SetType concl{SetTypeElem{itype_arrow({}, {}), IntervalTrace{}, 0}};
      return node(DRule::Fix, v, std::move(concl), {empty_node(v->kids[0])});
    }
    default:
      throw SynthesisError("cannot type value " + term_to_string(v));
  }
}

// Position of the next reduction inside a term: which child carries the
// evaluation context, or the term itself is the redex.
enum class RedexPos { Here, Fn, Guard, ScoreArg, PrimArg };

struct Redex {
  RedexPos pos;
  std::size_t prim_index = 0;
};

Redex redex_of(const Term& t) {
  switch (t->tag) {
    case Tag::App:
      return is_value(t->kids[0]) ? Redex{RedexPos::Here} : Redex{RedexPos::Fn};
    case Tag::If:
      return is_value(t->kids[0]) ? Redex{RedexPos::Here} : Redex{RedexPos::Guard};
    case Tag::Score:
      return is_value(t->kids[0]) ? Redex{RedexPos::Here} : Redex{RedexPos::ScoreArg};
    case Tag::Prim:
      for (std::size_t i = 0; i < t->kids.size(); ++i)
        if (!is_value(t->kids[i])) return Redex{RedexPos::PrimArg, i};
      return Redex{RedexPos::Here};
    case Tag::Sample:
      return Redex{RedexPos::Here};
    default:
      throw SynthesisError("no redex in " + term_to_string(t));
  }
}

// Reverse substitution: walks `pattern` (with free occurrences of the bound
// variables) parallel to a derivation of the substituted term. Rebuilds the
// derivation of `pattern` and collects one derivation per distinct set type
// for every binding.
struct Collected {
  Intersection sigma;
  std::vector<Derivation> derivs;  // one per sigma member

  void add(const SetType& a, const Derivation& d) {
    for (const auto& m : sigma)
      if (settype_equal(m, a)) return;
    sigma.push_back(a);
    derivs.push_back(d);
  }
};

DRule rule_for_tag(Tag tag) {
  switch (tag) {
    case Tag::Num:
    case Tag::IntervalNum:
      return DRule::Num;
    case Tag::Sample:
      return DRule::Sample;
    case Tag::Lam:
      return DRule::Abs;
    case Tag::Fix:
      return DRule::Fix;
    case Tag::App:
      return DRule::App;
    case Tag::If:
      return DRule::If;
    case Tag::Score:
      return DRule::Score;
    case Tag::Prim:
      return DRule::Prim;
    default:
      throw SynthesisError("no rule for this constructor");
  }
}

Derivation unsubstitute(const Term& pattern, const std::map<std::string, Term>& bind,
                        const Derivation& d, std::map<std::string, Collected>& out) {
  if (d->rule == DRule::Empty) return empty_node(pattern);
  if (pattern->tag != Tag::Var && d->rule != rule_for_tag(pattern->tag))
    throw SynthesisError("derivation shape does not follow the term");
  if (pattern->tag == Tag::Var) {
    auto it = bind.find(pattern->name);
    if (it == bind.end()) {
      return d;  // genuinely free variable: already a Var node
    }
    out[pattern->name].add(d->conclusion, d);
    return node(DRule::Var, pattern, d->conclusion, {});
  }
  switch (pattern->tag) {
    case Tag::Num:
    case Tag::IntervalNum:
    case Tag::Sample:
      return d;
    case Tag::Lam: {
      auto inner = bind;
      inner.erase(pattern->name);
      Derivation body = unsubstitute(pattern->kids[0], inner, d->premises[0], out);
      return node(DRule::Abs, pattern, d->conclusion, {body});
    }
    case Tag::Fix: {
      auto inner = bind;
      inner.erase(pattern->name);
      inner.erase(pattern->fun_name);
      std::vector<Derivation> prem;
      prem.push_back(unsubstitute(pattern->kids[0], inner, d->premises[0], out));
      for (std::size_t i = 1; i < d->premises.size(); ++i)
        prem.push_back(d->premises[i]);  // self premises are closed
      return node(DRule::Fix, pattern, d->conclusion, std::move(prem));
    }
    case Tag::App: {
      std::vector<Derivation> prem;
      prem.push_back(unsubstitute(pattern->kids[0], bind, d->premises[0], out));
      for (std::size_t i = 1; i < d->premises.size(); ++i)
        prem.push_back(unsubstitute(pattern->kids[1], bind, d->premises[i], out));
      return node(DRule::App, pattern, d->conclusion, std::move(prem));
    }
    case Tag::If: {
      std::vector<Derivation> prem;
      prem.push_back(unsubstitute(pattern->kids[0], bind, d->premises[0], out));
      // left premises then right premises, matching the guard split
      std::size_t lefts = 0;
      for (const auto& e : d->premises[0]->conclusion) {
        if (e.type->is_interval && interval_left(e.type->iv)) ++lefts;
      }
      for (std::size_t i = 1; i < d->premises.size(); ++i) {
        const Term& branch = i <= lefts ? pattern->kids[1] : pattern->kids[2];
        prem.push_back(unsubstitute(branch, bind, d->premises[i], out));
      }
      return node(DRule::If, pattern, d->conclusion, std::move(prem));
    }
    case Tag::Score:
      return node(DRule::Score, pattern, d->conclusion,
                  {unsubstitute(pattern->kids[0], bind, d->premises[0], out)});
    case Tag::Prim: {
      std::vector<Derivation> prem;
      prem.push_back(unsubstitute(pattern->kids[0], bind, d->premises[0], out));
      for (std::size_t i = 1; i < d->premises.size(); ++i)
        prem.push_back(unsubstitute(pattern->kids[1], bind, d->premises[i], out));
      return node(DRule::Prim, pattern, d->conclusion, std::move(prem));
    }
    default:
      throw SynthesisError("unsubstitute: unexpected pattern " + term_to_string(pattern));
  }
}

// Subject expansion across one deterministic step: from a derivation of the
// reduct, build the derivation of the original term (conclusion shifted by
// one step).
Derivation expand_det(const Term& m, const Derivation& dnext) {
  Redex rx = redex_of(m);
  if (rx.pos == RedexPos::Here) {
    switch (m->tag) {
      case Tag::App: {
        const Term& fn = m->kids[0];
        const Term& arg = m->kids[1];
        std::map<std::string, Collected> collected;
        if (fn->tag == Tag::Lam) {
          Derivation body = unsubstitute(fn->kids[0], {{fn->name, arg}}, dnext, collected);
          Collected& cx = collected[fn->name];
          ITypePtr arrow = itype_arrow(cx.sigma, dnext->conclusion);
          Derivation absn = node(DRule::Abs, fn, SetType{SetTypeElem{arrow, IntervalTrace{}, 0}}, {body});
          std::vector<Derivation> prem{absn};
          for (auto& ad : cx.derivs) prem.push_back(ad);
          return node(DRule::App, m, shift(dnext->conclusion, IntervalTrace{}, 1), std::move(prem));
        }
        if (fn->tag == Tag::Fix) {
          Derivation body =
              unsubstitute(fn->kids[0], {{fn->name, arg}, {fn->fun_name, fn}}, dnext, collected);
          Collected& cx = collected[fn->name];
          Collected& cf = collected[fn->fun_name];
          ITypePtr arrow = itype_arrow(cx.sigma, dnext->conclusion);
          std::vector<Derivation> fixprem{body};
          for (auto& sd : cf.derivs) fixprem.push_back(sd);
          Derivation fixn =
              node(DRule::Fix, fn, SetType{SetTypeElem{arrow, IntervalTrace{}, 0}}, std::move(fixprem));
          std::vector<Derivation> prem{fixn};
          for (auto& ad : cx.derivs) prem.push_back(ad);
          return node(DRule::App, m, shift(dnext->conclusion, IntervalTrace{}, 1), std::move(prem));
        }
        throw SynthesisError("application of non-function in expansion");
      }
      case Tag::If: {
        const Term& g = m->kids[0];
        if (!is_numeral(g)) throw SynthesisError("if expansion expects a numeral guard");
        Derivation guard = value_leaf(g);
        return node(DRule::If, m, shift(dnext->conclusion, IntervalTrace{}, 1), {guard, dnext});
      }
      case Tag::Score: {
        return node(DRule::Score, m, shift(dnext->conclusion, IntervalTrace{}, 1),
                    {node(DRule::Num, m->kids[0],
                          SetType{SetTypeElem{itype_interval(m->kids[0]->num), IntervalTrace{}, 0}}, {})});
      }
      case Tag::Prim: {
        std::vector<Derivation> prem;
        for (const auto& k : m->kids) prem.push_back(value_leaf(k));
        return node(DRule::Prim, m, shift(dnext->conclusion, IntervalTrace{}, 1), std::move(prem));
      }
      default:
        throw SynthesisError("unexpected deterministic redex " + term_to_string(m));
    }
  }
  // Congruence: the stepping child is rebuilt, siblings are reused.
  switch (rx.pos) {
    case RedexPos::Fn: {
      Derivation fn = expand_det(m->kids[0], dnext->premises[0]);
      std::vector<Derivation> prem{fn};
      for (std::size_t i = 1; i < dnext->premises.size(); ++i) prem.push_back(dnext->premises[i]);
      SetType concl;
      for (const auto& e : fn->conclusion) {
        SetType part = shift(e.type->cod, e.trace, e.count + 1);
        concl.insert(concl.end(), part.begin(), part.end());
      }
      return node(DRule::App, m, std::move(concl), std::move(prem));
    }
    case RedexPos::Guard: {
      Derivation guard = expand_det(m->kids[0], dnext->premises[0]);
      std::vector<Derivation> prem{guard};
      for (std::size_t i = 1; i < dnext->premises.size(); ++i) prem.push_back(dnext->premises[i]);
      SetType concl;
      std::size_t next = 1;
      std::vector<const SetTypeElem*> lefts, rights;
      for (const auto& e : guard->conclusion) {
        if (interval_left(e.type->iv))
          lefts.push_back(&e);
        else
          rights.push_back(&e);
      }
      for (const auto* e : lefts) {
        SetType part = shift(prem[next++]->conclusion, e->trace, e->count + 1);
        concl.insert(concl.end(), part.begin(), part.end());
      }
      for (const auto* e : rights) {
        SetType part = shift(prem[next++]->conclusion, e->trace, e->count + 1);
        concl.insert(concl.end(), part.begin(), part.end());
      }
      return node(DRule::If, m, std::move(concl), std::move(prem));
    }
    case RedexPos::ScoreArg: {
      Derivation arg = expand_det(m->kids[0], dnext->premises[0]);
      SetType concl;
      for (const auto& e : arg->conclusion) {
        if (e.type->iv.lo >= 0) {
          SetTypeElem ne = e;
          ne.count = e.count + 1;
          concl.push_back(std::move(ne));
        }
      }
      return node(DRule::Score, m, std::move(concl), {arg});
    }
    case RedexPos::PrimArg: {
      std::vector<Derivation> prem;
      if (rx.prim_index == 0) {
        Derivation a1 = expand_det(m->kids[0], dnext->premises[0]);
        prem.push_back(a1);
        for (std::size_t i = 1; i < dnext->premises.size(); ++i) prem.push_back(dnext->premises[i]);
      } else {
        prem.push_back(dnext->premises[0]);
        for (std::size_t i = 1; i < dnext->premises.size(); ++i)
          prem.push_back(expand_det(m->kids[1], dnext->premises[i]));
      }
      SetType concl;
      if (m->kids.size() == 1) {
        for (const auto& e : prem[0]->conclusion) {
          concl.push_back(SetTypeElem{itype_interval(prim_image(m->prim, {e.type->iv})), e.trace, e.count + 1});
        }
      } else {
        for (std::size_t i = 0; i < prem[0]->conclusion.size(); ++i) {
          const auto& e1 = prem[0]->conclusion[i];
          for (const auto& e2 : prem[1 + i]->conclusion) {
            IntervalTrace t = e1.trace;
            t.parts.insert(t.parts.end(), e2.trace.parts.begin(), e2.trace.parts.end());
            concl.push_back(SetTypeElem{itype_interval(prim_image(m->prim, {e1.type->iv, e2.type->iv})),
                                        std::move(t), e1.count + e2.count + 1});
          }
        }
      }
      return node(DRule::Prim, m, std::move(concl), std::move(prem));
    }
    case RedexPos::Here:
      break;
  }
  throw SynthesisError("unreachable expansion case");
}

// Subject expansion across a probabilistic (sample) step: merges the
// per-interval children, whose head intervals are pairwise almost disjoint.
Derivation expand_prob(const Term& m, const std::vector<std::pair<Interval, Derivation>>& groups) {
  if (m->tag == Tag::Sample) {
    SetType concl;
    for (const auto& [iv, d] : groups) {
      (void)d;
      IntervalTrace tr;
      tr.parts.push_back(iv);
      concl.push_back(SetTypeElem{itype_interval(iv), std::move(tr), 1});
    }
    return node(DRule::Sample, m, std::move(concl), {});
  }
  Redex rx = redex_of(m);
  auto child_groups = [&](std::size_t premise_index) {
    std::vector<std::pair<Interval, Derivation>> gs;
    gs.reserve(groups.size());
    for (const auto& [iv, d] : groups) gs.emplace_back(iv, d->premises[premise_index]);
    return gs;
  };
  switch (rx.pos) {
    case RedexPos::Fn: {
      Derivation fn = expand_prob(m->kids[0], child_groups(0));
      std::vector<Derivation> prem{fn};
      for (const auto& [iv, d] : groups) {
        (void)iv;
        for (std::size_t i = 1; i < d->premises.size(); ++i) prem.push_back(d->premises[i]);
      }
      SetType concl;
      for (const auto& e : fn->conclusion) {
        SetType part = shift(e.type->cod, e.trace, e.count + 1);
        concl.insert(concl.end(), part.begin(), part.end());
      }
      return node(DRule::App, m, std::move(concl), std::move(prem));
    }
    case RedexPos::Guard: {
      Derivation guard = expand_prob(m->kids[0], child_groups(0));
      // branch premises in group-major order, matching the merged guard's
      // element order
      std::vector<Derivation> left_prem, right_prem;
      for (const auto& [iv, d] : groups) {
        (void)iv;
        const Derivation& g = d->premises[0];
        std::size_t idx = 1;
        for (const auto& e : g->conclusion)
          if (interval_left(e.type->iv)) left_prem.push_back(d->premises[idx++]);
        for (const auto& e : g->conclusion)
          if (!interval_left(e.type->iv)) right_prem.push_back(d->premises[idx++]);
      }
      std::vector<Derivation> prem{guard};
      SetType concl;
      std::size_t li = 0, ri = 0;
      std::vector<const SetTypeElem*> lefts, rights;
      for (const auto& e : guard->conclusion) {
        if (interval_left(e.type->iv))
          lefts.push_back(&e);
        else
          rights.push_back(&e);
      }
      for (const auto* e : lefts) {
        prem.push_back(left_prem[li]);
        SetType part = shift(left_prem[li]->conclusion, e->trace, e->count + 1);
        concl.insert(concl.end(), part.begin(), part.end());
        ++li;
      }
      for (const auto* e : rights) {
        prem.push_back(right_prem[ri]);
        SetType part = shift(right_prem[ri]->conclusion, e->trace, e->count + 1);
        concl.insert(concl.end(), part.begin(), part.end());
        ++ri;
      }
      return node(DRule::If, m, std::move(concl), std::move(prem));
    }
    case RedexPos::ScoreArg: {
      Derivation arg = expand_prob(m->kids[0], child_groups(0));
      SetType concl;
      for (const auto& e : arg->conclusion) {
        if (e.type->iv.lo >= 0) {
          SetTypeElem ne = e;
          ne.count = e.count + 1;
          concl.push_back(std::move(ne));
        }
      }
      return node(DRule::Score, m, std::move(concl), {arg});
    }
    case RedexPos::PrimArg: {
      std::vector<Derivation> prem;
      if (rx.prim_index == 0) {
        Derivation a1 = expand_prob(m->kids[0], child_groups(0));
        prem.push_back(a1);
        for (const auto& [iv, d] : groups) {
          (void)iv;
          for (std::size_t i = 1; i < d->premises.size(); ++i) prem.push_back(d->premises[i]);
        }
      } else {
        // first argument is a value: every group shares its singleton premise
        prem.push_back(groups.front().second->premises[0]);
        std::vector<std::pair<Interval, Derivation>> arg2;
        for (const auto& [iv, d] : groups) arg2.emplace_back(iv, d->premises[1]);
        prem.push_back(expand_prob(m->kids[1], arg2));
      }
      SetType concl;
      if (m->kids.size() == 1) {
        for (const auto& e : prem[0]->conclusion)
          concl.push_back(SetTypeElem{itype_interval(prim_image(m->prim, {e.type->iv})), e.trace, e.count + 1});
      } else {
        for (std::size_t i = 0; i < prem[0]->conclusion.size(); ++i) {
          const auto& e1 = prem[0]->conclusion[i];
          for (const auto& e2 : prem[1 + i]->conclusion) {
            IntervalTrace t = e1.trace;
            t.parts.insert(t.parts.end(), e2.trace.parts.begin(), e2.trace.parts.end());
            concl.push_back(SetTypeElem{itype_interval(prim_image(m->prim, {e1.type->iv, e2.type->iv})),
                                        std::move(t), e1.count + e2.count + 1});
          }
        }
      }
      return node(DRule::Prim, m, std::move(concl), std::move(prem));
    }
    case RedexPos::Here:
      break;
  }
  throw SynthesisError("unreachable probabilistic expansion");
}

Derivation synth(const Term& m, const std::vector<IntervalTrace>& traces) {
  if (is_value(m)) {
    for (const auto& t : traces)
      if (!t.empty()) throw SynthesisError("trace not fully consumed at a value");
    if (traces.size() != 1) throw SynthesisError("duplicate empty traces are not strongly compatible");
    return value_leaf(m);
  }
  IStepOutcome out = step_interval(m, nullptr);
  if (out.kind == IStepOutcome::Stepped) {
    return expand_det(m, synth(out.next, traces));
  }
  if (out.kind == IStepOutcome::TraceEmpty) {
    // sample step: group by head interval, preserving first-seen order
    std::vector<std::pair<Interval, std::vector<IntervalTrace>>> groups;
    for (const auto& t : traces) {
      if (t.empty()) throw SynthesisError("trace exhausted before a sample");
      const Interval& h = t.parts[0];
      IntervalTrace tail;
      tail.parts.assign(t.parts.begin() + 1, t.parts.end());
      bool found = false;
      for (auto& [iv, tails] : groups) {
        if (iv == h) {
          tails.push_back(std::move(tail));
          found = true;
          break;
        }
      }
      if (!found) groups.emplace_back(h, std::vector<IntervalTrace>{std::move(tail)});
    }
    std::vector<std::pair<Interval, Derivation>> child;
    child.reserve(groups.size());
    for (auto& [iv, tails] : groups) {
      IStepOutcome st = step_interval(m, &iv);
      if (st.kind != IStepOutcome::Stepped) throw SynthesisError("sample step failed");
      child.emplace_back(iv, synth(st.next, tails));
    }
    return expand_prob(m, child);
  }
  throw SynthesisError("reduction blocked during synthesis: " + out.reason);
}

}  // namespace

Derivation synthesize(const Term& t, const std::vector<IntervalTrace>& boxes) {
  if (boxes.empty()) throw SynthesisError("no traces given");
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = i + 1; j < boxes.size(); ++j)
      if (!strongly_compatible(boxes[i], boxes[j]))
        throw SynthesisError("traces are not pairwise strongly compatible");
  Term m = embed(t);
  for (const auto& b : boxes) {
    IRunResult r = run_interval(m, b);
    if (r.status != IRunStatus::Terminates)
      throw SynthesisError("trace " + trace_to_string(b) + " is not terminating: " + r.reason);
  }
  return synth(m, boxes);
}

namespace {

nlohmann::json settype_json(const SetType& a);

nlohmann::json itype_json(const ITypePtr& t) {
  if (t->is_interval)
    return {{"interval", {rat_to_string(t->iv.lo), rat_to_string(t->iv.hi)}}};
  nlohmann::json dom = nlohmann::json::array();
  for (const auto& m : t->dom) dom.push_back(settype_json(m));
  return {{"dom", dom}, {"cod", settype_json(t->cod)}};
}

nlohmann::json settype_json(const SetType& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : a) {
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& iv : e.trace.parts) tr.push_back({rat_to_string(iv.lo), rat_to_string(iv.hi)});
    arr.push_back({{"type", itype_json(e.type)}, {"trace", tr}, {"steps", e.count}});
  }
  return arr;
}

const char* rule_name(DRule r) {
  switch (r) {
    case DRule::Var: return "var";
    case DRule::Num: return "num";
    case DRule::Sample: return "sample";
    case DRule::Fix: return "fix";
    case DRule::App: return "app";
    case DRule::Empty: return "empty";
    case DRule::Abs: return "abs";
    case DRule::Score: return "score";
    case DRule::If: return "if";
    case DRule::Prim: return "prim";
  }
  return "?";
}

nlohmann::json derivation_json(const Derivation& d) {
  nlohmann::json prem = nlohmann::json::array();
  for (const auto& p : d->premises) prem.push_back(derivation_json(p));
  return {{"rule", rule_name(d->rule)},
          {"subject", term_to_string(d->subject)},
          {"conclusion", settype_json(d->conclusion)},
          {"premises", prem}};
}

}  // namespace

std::string derivation_to_json(const Derivation& d) { return derivation_json(d).dump(2); }

}  // namespace spcf
