#include "spcf/interval_sem.hpp"

#include <random>

namespace spcf {

Term embed(const Term& t) {
  if (t->tag == Tag::Num) return mk_interval_num(t->num.lo, t->num.hi);
  if (t->kids.empty()) return t;
  TermNode n = *t;
  for (auto& k : n.kids) k = embed(k);
  return std::make_shared<const TermNode>(std::move(n));
}

GuardSide guard_side(const Interval& g) {
  if (g.hi <= 0) return GuardSide::Left;
  if (g.lo >= 0) return GuardSide::Right;
  return GuardSide::Straddle;
}

namespace {

struct ICtx {
  const Interval* head;
  bool consumed = false;
};

IStepOutcome istep(const Term& t, ICtx& cx) {
  switch (t->tag) {
    case Tag::Var:
      return {IStepOutcome::Stuck, nullptr, false, "free variable " + t->name};
    case Tag::Num:
    case Tag::IntervalNum:
    case Tag::Lam:
    case Tag::Fix:
    case Tag::SampleVar:
    case Tag::BoxedPrim:
    case Tag::StarValue:
    case Tag::UnknownArg:
    case Tag::HoleMu:
      return {IStepOutcome::IsValue, nullptr, false, ""};

    case Tag::Sample:
      if (!cx.head) return {IStepOutcome::TraceEmpty, nullptr, false, "sample on exhausted trace"};
      cx.consumed = true;
      return {IStepOutcome::Stepped, mk_interval_num(cx.head->lo, cx.head->hi), false, ""};

    case Tag::Score: {
      const Term& m = t->kids[0];
      if (m->tag == Tag::IntervalNum) {
        if (m->num.lo >= 0) return {IStepOutcome::Stepped, m, false, ""};
        if (m->num.hi < 0) return {IStepOutcome::Stuck, nullptr, false, "score of negative interval"};
        return {IStepOutcome::Indeterminate, nullptr, false, "score interval straddles 0"};
      }
      if (is_value(m)) return {IStepOutcome::Stuck, nullptr, false, "score of non-numeral value"};
      IStepOutcome inner = istep(m, cx);
      if (inner.kind != IStepOutcome::Stepped) return inner;
      return {IStepOutcome::Stepped, mk_score(inner.next), false, ""};
    }

    case Tag::If: {
      const Term& g = t->kids[0];
      if (g->tag == Tag::IntervalNum) {
        switch (guard_side(g->num)) {
          case GuardSide::Left:
            return {IStepOutcome::Stepped, t->kids[1], false, ""};
          case GuardSide::Right:
            return {IStepOutcome::Stepped, t->kids[2], false, ""};
          case GuardSide::Straddle:
            return {IStepOutcome::Indeterminate, nullptr, false, "guard interval straddles 0"};
        }
      }
      if (is_value(g)) return {IStepOutcome::Stuck, nullptr, false, "non-numeral guard"};
      IStepOutcome inner = istep(g, cx);
      if (inner.kind != IStepOutcome::Stepped) return inner;
      return {IStepOutcome::Stepped, mk_if(inner.next, t->kids[1], t->kids[2]), false, ""};
    }

    case Tag::Prim: {
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        const Term& k = t->kids[i];
        if (is_value(k)) continue;
        IStepOutcome inner = istep(k, cx);
        if (inner.kind != IStepOutcome::Stepped) return inner;
        TermNode n = *t;
        n.kids[i] = inner.next;
        return {IStepOutcome::Stepped, std::make_shared<const TermNode>(std::move(n)), false, ""};
      }
      std::vector<Interval> args;
      args.reserve(t->kids.size());
      for (const auto& k : t->kids) {
        if (k->tag != Tag::IntervalNum)
          return {IStepOutcome::Stuck, nullptr, false, "non-numeral primitive argument"};
        args.push_back(k->num);
      }
      Interval r = prim_image(t->prim, args);
      return {IStepOutcome::Stepped, mk_interval_num(r.lo, r.hi), false, ""};
    }

    case Tag::App: {
      const Term& fn = t->kids[0];
      const Term& arg = t->kids[1];
      if (!is_value(fn)) {
        IStepOutcome inner = istep(fn, cx);
        if (inner.kind != IStepOutcome::Stepped) return inner;
        return {IStepOutcome::Stepped, mk_app(inner.next, arg), false, ""};
      }
      switch (fn->tag) {
        case Tag::Lam:
          return {IStepOutcome::Stepped, substitute(fn->kids[0], {{fn->name, arg}}), false, ""};
        case Tag::Fix:
          return {IStepOutcome::Stepped, substitute(fn->kids[0], {{fn->name, arg}, {fn->fun_name, fn}}), false, ""};
        default:
          return {IStepOutcome::Stuck, nullptr, false, "application of non-function"};
      }
    }
  }
  return {IStepOutcome::Stuck, nullptr, false, "unreachable"};
}

}  // namespace

IStepOutcome step_interval(const Term& t, const Interval* head) {
  ICtx cx{head, false};
  IStepOutcome out = istep(t, cx);
  out.consumed = cx.consumed;
  return out;
}

IRunResult run_interval(const Term& t, const IntervalTrace& trace, std::size_t budget) {
  IRunResult res;
  Term cur = t;
  std::size_t pos = 0;
  for (;;) {
    const Interval* head = pos < trace.size() ? &trace.parts[pos] : nullptr;
    IStepOutcome out = step_interval(cur, head);
    switch (out.kind) {
      case IStepOutcome::IsValue:
        if (pos < trace.size()) {
          res.status = IRunStatus::Stuck;
          res.reason = "value reached with unconsumed trace";
        } else {
          res.status = IRunStatus::Terminates;
          res.result = cur;
        }
        res.consumed = pos;
        return res;
      case IStepOutcome::Indeterminate:
        res.status = IRunStatus::Indeterminate;
        res.reason = out.reason;
        res.consumed = pos;
        return res;
      case IStepOutcome::Stuck:
      case IStepOutcome::TraceEmpty:
        res.status = IRunStatus::Stuck;
        res.reason = out.reason;
        res.consumed = pos;
        return res;
      case IStepOutcome::Stepped:
        break;
    }
    if (res.steps >= budget) {
      res.status = IRunStatus::Budget;
      res.consumed = pos;
      return res;
    }
    cur = out.next;
    ++res.steps;
    if (out.consumed) ++pos;
  }
}

RefinementReport refinement_check(const Term& t, const IntervalTrace& trace, std::size_t samples,
                                  std::uint64_t seed) {
  RefinementReport rep;
  IRunResult ir = run_interval(embed(t), trace);
  rep.trace_terminates = ir.status == IRunStatus::Terminates;
  rep.expected_steps = ir.steps;
  if (!rep.trace_terminates) {
    rep.detail = "interval run did not terminate: " + ir.reason;
    return rep;
  }
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    StdTrace st;
    st.reserve(trace.size());
    for (const auto& iv : trace.parts) {
      if (iv.is_point()) {
        st.push_back(iv.lo);
        continue;
      }
      // interior dyadic: lo + width*(2k+1)/2^53
      std::uint64_t k = rng() >> 12;
      Rat u(2 * mpz_class(k) + 1, mpz_class(1) << 53);
      st.push_back(iv.lo + iv.width() * u);
    }
    RunResult rr = run_cbn(t, st);
    bool ok = rr.status == RunStatus::Value && rr.steps == rep.expected_steps;
    if (!ok) {
      ++rep.violations;
      if (rep.detail.empty()) {
        rep.detail = "refinement disagreed: status " + std::to_string(static_cast<int>(rr.status)) +
                     ", steps " + std::to_string(rr.steps);
      }
    }
    ++rep.samples;
  }
  return rep;
}

}  // namespace spcf
