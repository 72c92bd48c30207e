#include "spcf/symexec.hpp"

#include <algorithm>
#include <map>

namespace spcf {

std::string oracle_to_string(const Oracle& o) {
  std::string s;
  for (Dir d : o) s.push_back(d == Dir::L ? 'L' : 'R');
  return s.empty() ? "eps" : s;
}

std::string constraint_to_string(const Constraint& c) {
  std::string op = c.rel == Rel::LeqZero ? " <= 0" : c.rel == Rel::GtZero ? " > 0" : " >= 0";
  return term_to_string(c.value) + op;
}

namespace {

bool is_sym_value(const Term& t) { return is_value(t); }

bool constant_rat(const Term& t, Rat& out) {
  if (t->tag == Tag::Num) {
    out = t->num.lo;
    return true;
  }
  return false;
}

// Whether a constant constraint certainly fails.
bool constant_violates(const Term& v, Rel rel) {
  Rat r;
  if (!constant_rat(v, r)) return false;
  switch (rel) {
    case Rel::LeqZero:
      return !(r <= 0);
    case Rel::GtZero:
      return !(r > 0);
    case Rel::GeqZero:
      return !(r >= 0);
  }
  return false;
}

// Symbolic machine step outcomes.
struct SStep {
  enum Kind {
    Stepped,
    IsValue,
    NeedOracle,  // blocked on a conditional with the oracle exhausted
    Stuck,
  } kind = Stuck;
  Term next;
  bool sampled = false;                  // allocated a fresh sample variable
  std::optional<Constraint> constraint;  // recorded along this step
  std::string reason;
};

struct SCtx {
  const Dir* dir;  // next oracle letter, or null
  std::size_t vars;
  bool took_dir = false;
};

SStep sstep(const Term& t, SCtx& cx) {
  switch (t->tag) {
    case Tag::Var:
      return {SStep::Stuck, nullptr, false, std::nullopt, "free variable " + t->name};
    case Tag::Num:
    case Tag::IntervalNum:
    case Tag::Lam:
    case Tag::Fix:
    case Tag::SampleVar:
    case Tag::BoxedPrim:
    case Tag::StarValue:
    case Tag::UnknownArg:
    case Tag::HoleMu:
      return {SStep::IsValue, nullptr, false, std::nullopt, ""};

    case Tag::Sample: {
      SStep out{SStep::Stepped, mk_sample_var(cx.vars), true, std::nullopt, ""};
      return out;
    }

    case Tag::Score: {
      const Term& m = t->kids[0];
      if (is_sym_value(m)) {
        return {SStep::Stepped, m, false, Constraint{m, Rel::GeqZero}, ""};
      }
      SStep inner = sstep(m, cx);
      if (inner.kind != SStep::Stepped) return inner;
      inner.next = mk_score(inner.next);
      return inner;
    }

    case Tag::If: {
      const Term& g = t->kids[0];
      if (is_sym_value(g)) {
        if (!cx.dir) return {SStep::NeedOracle, nullptr, false, std::nullopt, ""};
        cx.took_dir = true;
        if (*cx.dir == Dir::L) return {SStep::Stepped, t->kids[1], false, Constraint{g, Rel::LeqZero}, ""};
        return {SStep::Stepped, t->kids[2], false, Constraint{g, Rel::GtZero}, ""};
      }
      SStep inner = sstep(g, cx);
      if (inner.kind != SStep::Stepped) return inner;
      inner.next = mk_if(inner.next, t->kids[1], t->kids[2]);
      return inner;
    }

    case Tag::Prim: {
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        const Term& k = t->kids[i];
        if (is_sym_value(k)) continue;
        SStep inner = sstep(k, cx);
        if (inner.kind != SStep::Stepped) return inner;
        TermNode n = *t;
        n.kids[i] = inner.next;
        inner.next = std::make_shared<const TermNode>(std::move(n));
        return inner;
      }
      // fold constant linear applications, box the rest
      bool all_const = t->prim.kind == PrimKind::Linear;
      std::vector<Rat> args;
      if (all_const) {
        for (const auto& k : t->kids) {
          Rat r;
          if (!constant_rat(k, r)) {
            all_const = false;
            break;
          }
          args.push_back(r);
        }
      }
      if (all_const) return {SStep::Stepped, mk_num(prim_eval(t->prim, args)), false, std::nullopt, ""};
      return {SStep::Stepped, mk_boxed_prim(t->prim, t->kids), false, std::nullopt, ""};
    }

    case Tag::App: {
      const Term& fn = t->kids[0];
      const Term& arg = t->kids[1];
      if (!is_sym_value(fn)) {
        SStep inner = sstep(fn, cx);
        if (inner.kind != SStep::Stepped) return inner;
        inner.next = mk_app(inner.next, arg);
        return inner;
      }
      switch (fn->tag) {
        case Tag::Lam:
          return {SStep::Stepped, substitute(fn->kids[0], {{fn->name, arg}}), false, std::nullopt, ""};
        case Tag::Fix:
          return {SStep::Stepped, substitute(fn->kids[0], {{fn->name, arg}, {fn->fun_name, fn}}), false,
                  std::nullopt, ""};
        default:
          return {SStep::Stuck, nullptr, false, std::nullopt, "application of non-function"};
      }
    }
  }
  return {SStep::Stuck, nullptr, false, std::nullopt, "unreachable"};
}

}  // namespace

SymRun symbolic_run(const Term& t, const Oracle& oracle, std::size_t budget) {
  SymRun res;
  Term cur = t;
  std::size_t pos = 0;
  for (;;) {
    SCtx cx{pos < oracle.size() ? &oracle[pos] : nullptr, res.constraints.var_count, false};
    SStep out = sstep(cur, cx);
    if (out.kind == SStep::IsValue) {
      if (pos < oracle.size()) {
        res.kind = SymRun::NoPath;
        res.reason = "value reached with oracle letters left";
      } else {
        res.kind = SymRun::Done;
        res.value = cur;
      }
      return res;
    }
    if (out.kind == SStep::NeedOracle) {
      res.kind = SymRun::NoPath;
      res.reason = "oracle exhausted at a conditional";
      return res;
    }
    if (out.kind == SStep::Stuck) {
      res.kind = SymRun::NoPath;
      res.reason = out.reason;
      return res;
    }
    if (res.steps >= budget) {
      res.kind = SymRun::Budget;
      return res;
    }
    cur = out.next;
    ++res.steps;
    if (out.sampled) ++res.constraints.var_count;
    if (cx.took_dir) ++pos;
    if (out.constraint) {
      if (constant_violates(out.constraint->value, out.constraint->rel)) res.constraints.trivially_unsat = true;
      res.constraints.items.push_back(*out.constraint);
    }
  }
}

OracleFrontier::OracleFrontier(Term t, std::size_t step_budget) : budget_(step_budget) {
  queue_.push_back(Config{std::move(t), {}, 0, 0, nullptr});
}

std::optional<PathResult> OracleFrontier::advance(Config cfg) {
  // Run this configuration until it terminates, forks, or dies.
  for (;;) {
    SCtx cx{nullptr, cfg.vars, false};
    SStep out = sstep(cfg.term, cx);
    ++configs_explored_;
    if (out.kind == SStep::IsValue) {
      PathResult pr;
      pr.oracle = cfg.oracle;
      pr.value = cfg.term;
      pr.steps = cfg.steps;
      pr.constraints.var_count = cfg.vars;
      std::vector<Constraint> rev;
      for (auto p = cfg.constraints; p; p = p->tail) rev.push_back(p->c);
      std::reverse(rev.begin(), rev.end());
      pr.constraints.items = std::move(rev);
      return pr;
    }
    if (out.kind == SStep::NeedOracle) {
      // Fork on the conditional: find the guard value by stepping with an
      // explicit letter for each side.
      if (cfg.steps >= budget_) return std::nullopt;  // the branch step itself would exceed
      for (Dir d : {Dir::L, Dir::R}) {
        Oracle one{d};
        SCtx bx{&one[0], cfg.vars, false};
        SStep bout = sstep(cfg.term, bx);
        if (bout.kind != SStep::Stepped) return std::nullopt;
        if (bout.constraint && constant_violates(bout.constraint->value, bout.constraint->rel))
          continue;  // dead side of a constant guard
        Config child = cfg;
        child.term = bout.next;
        child.oracle.push_back(d);
        ++child.steps;
        if (bout.constraint) {
          child.constraints = std::make_shared<const CNode>(CNode{*bout.constraint, cfg.constraints});
        }
        queue_.push_back(std::move(child));
      }
      return std::nullopt;
    }
    if (out.kind == SStep::Stuck) return std::nullopt;
    if (cfg.steps >= budget_) return std::nullopt;
    cfg.term = out.next;
    ++cfg.steps;
    if (out.sampled) ++cfg.vars;
    if (out.constraint) {
      if (constant_violates(out.constraint->value, out.constraint->rel)) return std::nullopt;  // dead path
      cfg.constraints = std::make_shared<const CNode>(CNode{*out.constraint, cfg.constraints});
    }
  }
}

std::optional<PathResult> OracleFrontier::next() {
  while (!queue_.empty()) {
    Config cfg = std::move(queue_.front());
    queue_.pop_front();
    if (auto r = advance(std::move(cfg))) return r;
  }
  return std::nullopt;
}

Interval eval_sym(const Term& v, const VarBox& box) {
  switch (v->tag) {
    case Tag::Num:
    case Tag::IntervalNum:
      return v->num;
    case Tag::SampleVar:
      if (v->sample_index >= box.size()) throw std::out_of_range("sample variable outside box");
      return box[v->sample_index];
    case Tag::BoxedPrim: {
      std::vector<Interval> args;
      args.reserve(v->kids.size());
      for (const auto& k : v->kids) args.push_back(eval_sym(k, box));
      return prim_image(v->prim, args);
    }
    default:
      throw std::invalid_argument("not a ground symbolic value: " + term_to_string(v));
  }
}

std::optional<AffineForm> affine_of(const Term& v) {
  std::map<std::size_t, Rat> coeffs;
  Rat constant(0);
  // rec returns false on non-linear structure
  auto rec = [&](auto&& self, const Term& t, const Rat& scale) -> bool {
    switch (t->tag) {
      case Tag::Num:
      case Tag::IntervalNum:
        if (t->num.lo != t->num.hi) return false;
        constant += scale * t->num.lo;
        return true;
      case Tag::SampleVar:
        coeffs[t->sample_index] += scale;
        return true;
      case Tag::BoxedPrim:
      case Tag::Prim: {
        const PrimOp& f = t->prim;
        if (f.kind != PrimKind::Linear) return false;
        if (f.name == "add") return self(self, t->kids[0], scale) && self(self, t->kids[1], scale);
        if (f.name == "sub") return self(self, t->kids[0], scale) && self(self, t->kids[1], -scale);
        if (f.name == "neg") return self(self, t->kids[0], -scale);
        if (f.name == "mulc") return self(self, t->kids[0], scale * f.scale);
        return false;
      }
      default:
        return false;
    }
  };
  if (!rec(rec, v, Rat(1))) return std::nullopt;
  AffineForm out;
  out.constant = constant;
  for (auto& [idx, c] : coeffs) {
    if (c != 0) out.coeffs.emplace_back(idx, c);
  }
  return out;
}

namespace {

enum class ConstraintOnBox { True, False, Unknown };

ConstraintOnBox classify_constraint(const Constraint& c, const VarBox& box) {
  Interval v = eval_sym(c.value, box);
  bool affine_nonconst = false;
  if (v.lo == 0 || v.hi == 0) {
    auto af = affine_of(c.value);
    affine_nonconst = af && !af->is_constant();
  }
  switch (c.rel) {
    case Rel::LeqZero:
      if (v.hi <= 0) return ConstraintOnBox::True;
      if (v.lo > 0) return ConstraintOnBox::False;
      // boundary-only satisfaction is a null set for affine values
      if (v.lo >= 0 && affine_nonconst) return ConstraintOnBox::False;
      return ConstraintOnBox::Unknown;
    case Rel::GtZero:
      if (v.hi <= 0) return ConstraintOnBox::False;
      if (v.lo > 0) return ConstraintOnBox::True;
      if (v.lo >= 0 && affine_nonconst) return ConstraintOnBox::True;
      return ConstraintOnBox::Unknown;
    case Rel::GeqZero:
      if (v.lo >= 0) return ConstraintOnBox::True;
      if (v.hi < 0) return ConstraintOnBox::False;
      if (v.hi <= 0 && affine_nonconst) return ConstraintOnBox::False;
      return ConstraintOnBox::Unknown;
  }
  return ConstraintOnBox::Unknown;
}

}  // namespace

BoxClass check_box(const ConstraintSet& cs, const VarBox& box) {
  bool all_true = true;
  for (const auto& c : cs.items) {
    switch (classify_constraint(c, box)) {
      case ConstraintOnBox::False:
        return BoxClass::Outside;
      case ConstraintOnBox::Unknown:
        all_true = false;
        break;
      case ConstraintOnBox::True:
        break;
    }
  }
  return all_true ? BoxClass::Inside : BoxClass::Straddle;
}

}  // namespace spcf
