#include "spcf/semantics.hpp"

#include <stdexcept>
#include <type_traits>

namespace spcf {

namespace {

enum class Mode { CbN, CbV, Counting };

struct Ctx {
  Mode mode;
  const Rat* head;      // next trace element, or null
  bool consumed = false;
  bool counted = false;  // recursion-hole firing (counting mode)
};

bool numeral_rat(const Term& t, Rat& out) {
  if (t->tag == Tag::Num) {
    out = t->num.lo;
    return true;
  }
  return false;
}

// Performs one reduction of the unique redex, or reports value/stuck.
// For CbV and counting, arguments are reduced before beta steps fire.
StepOutcome step_rec(const Term& t, Ctx& cx) {
  switch (t->tag) {
    case Tag::Var:
      return {StepOutcome::Stuck, nullptr, false, "free variable " + t->name};
    case Tag::Num:
    case Tag::IntervalNum:
    case Tag::Lam:
    case Tag::Fix:
    case Tag::SampleVar:
    case Tag::BoxedPrim:
    case Tag::StarValue:
    case Tag::UnknownArg:
    case Tag::HoleMu:
      return {StepOutcome::IsValue, nullptr, false, ""};

    case Tag::Sample: {
      if (!cx.head) return {StepOutcome::TraceEmpty, nullptr, false, "sample on exhausted trace"};
      cx.consumed = true;
      return {StepOutcome::Stepped, mk_num(*cx.head), false, ""};
    }

    case Tag::Score: {
      const Term& m = t->kids[0];
      Rat r;
      if (numeral_rat(m, r)) {
        if (r < 0) return {StepOutcome::Stuck, nullptr, false, "score of negative numeral"};
        return {StepOutcome::Stepped, m, false, ""};
      }
      if (cx.mode == Mode::Counting && m->tag == Tag::StarValue)
        return {StepOutcome::Stuck, nullptr, false, "score of unknown recursive outcome"};
      if (is_value(m)) return {StepOutcome::Stuck, nullptr, false, "score of non-numeral value"};
      StepOutcome inner = step_rec(m, cx);
      if (inner.kind != StepOutcome::Stepped) return inner;
      return {StepOutcome::Stepped, mk_score(inner.next), false, ""};
    }

    case Tag::If: {
      const Term& g = t->kids[0];
      Rat r;
      if (numeral_rat(g, r)) {
        return {StepOutcome::Stepped, r <= 0 ? t->kids[1] : t->kids[2], false, ""};
      }
      if (cx.mode == Mode::Counting && g->tag == Tag::StarValue)
        return {StepOutcome::Stuck, nullptr, false, "unknown recursive outcome in guard"};
      if (is_value(g)) return {StepOutcome::Stuck, nullptr, false, "non-numeral guard"};
      StepOutcome inner = step_rec(g, cx);
      if (inner.kind != StepOutcome::Stepped) return inner;
      return {StepOutcome::Stepped, mk_if(inner.next, t->kids[1], t->kids[2]), false, ""};
    }

    case Tag::Prim: {
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        const Term& k = t->kids[i];
        if (is_value(k)) continue;
        StepOutcome inner = step_rec(k, cx);
        if (inner.kind != StepOutcome::Stepped) return inner;
        TermNode n = *t;
        n.kids[i] = inner.next;
        return {StepOutcome::Stepped, std::make_shared<const TermNode>(std::move(n)), false, ""};
      }
      // all arguments are values
      if (cx.mode == Mode::Counting) {
        for (const auto& k : t->kids)
          if (k->tag == Tag::StarValue) return {StepOutcome::Stepped, mk_star(), false, ""};
      }
      std::vector<Rat> args;
      args.reserve(t->kids.size());
      for (const auto& k : t->kids) {
        Rat r;
        if (!numeral_rat(k, r)) return {StepOutcome::Stuck, nullptr, false, "non-numeral primitive argument"};
        args.push_back(r);
      }
      return {StepOutcome::Stepped, mk_num(prim_eval(t->prim, args)), false, ""};
    }

    case Tag::App: {
      const Term& fn = t->kids[0];
      const Term& arg = t->kids[1];
      if (!is_value(fn)) {
        StepOutcome inner = step_rec(fn, cx);
        if (inner.kind != StepOutcome::Stepped) return inner;
        return {StepOutcome::Stepped, mk_app(inner.next, arg), false, ""};
      }
      bool call_by_value = cx.mode != Mode::CbN;
      if (call_by_value && !is_value(arg)) {
        if (fn->tag != Tag::Lam && fn->tag != Tag::Fix && fn->tag != Tag::HoleMu)
          return {StepOutcome::Stuck, nullptr, false, "application of non-function"};
        StepOutcome inner = step_rec(arg, cx);
        if (inner.kind != StepOutcome::Stepped) return inner;
        return {StepOutcome::Stepped, mk_app(fn, inner.next), false, ""};
      }
      switch (fn->tag) {
        case Tag::Lam:
          return {StepOutcome::Stepped, substitute(fn->kids[0], {{fn->name, arg}}), false, ""};
        case Tag::Fix:
          return {StepOutcome::Stepped, substitute(fn->kids[0], {{fn->name, arg}, {fn->fun_name, fn}}), false, ""};
        case Tag::HoleMu:
          if (cx.mode == Mode::Counting) {
            cx.counted = true;
            return {StepOutcome::Stepped, mk_star(), false, ""};
          }
          return {StepOutcome::Stuck, nullptr, false, "recursion hole applied outside counting"};
        default:
          return {StepOutcome::Stuck, nullptr, false, "application of non-function"};
      }
    }
  }
  return {StepOutcome::Stuck, nullptr, false, "unreachable"};
}

StepOutcome one_step(Mode mode, const Term& t, const Rat* head, bool& consumed, bool& counted) {
  Ctx cx{mode, head, false, false};
  StepOutcome out = step_rec(t, cx);
  consumed = cx.consumed;
  counted = cx.counted;
  return out;
}

template <typename Result>
Result run_loop(Mode mode, const Term& start, const StdTrace& trace, std::size_t budget) {
  Result res;
  Term cur = start;
  std::size_t pos = 0;
  for (;;) {
    const Rat* head = pos < trace.size() ? &trace[pos] : nullptr;
    bool consumed = false, counted = false;
    StepOutcome out = one_step(mode, cur, head, consumed, counted);
    if (out.kind == StepOutcome::IsValue) {
      if (pos < trace.size()) {
        res.status = RunStatus::Stuck;
        res.stuck_reason = "value reached with unconsumed trace";
      } else {
        res.status = RunStatus::Value;
        res.result = cur;
      }
      res.consumed = pos;
      return res;
    }
    if (out.kind == StepOutcome::Stuck) {
      res.status = RunStatus::Stuck;
      res.stuck_reason = out.reason;
      res.consumed = pos;
      return res;
    }
    if (out.kind == StepOutcome::TraceEmpty) {
      res.status = RunStatus::TraceExhausted;
      res.consumed = pos;
      return res;
    }
    if (res.steps >= budget) {
      res.status = RunStatus::BudgetExceeded;
      res.consumed = pos;
      return res;
    }
    cur = out.next;
    ++res.steps;
    if (consumed) ++pos;
    if constexpr (std::is_same_v<Result, CountResult>) {
      if (counted) ++res.calls;
    }
  }
}

}  // namespace

StepOutcome step_cbn(const Term& t, const Rat* head) {
  bool consumed = false, counted = false;
  StepOutcome out = one_step(Mode::CbN, t, head, consumed, counted);
  out.consumed = consumed;
  return out;
}

StepOutcome step_cbv(const Term& t, const Rat* head) {
  bool consumed = false, counted = false;
  StepOutcome out = one_step(Mode::CbV, t, head, consumed, counted);
  out.consumed = consumed;
  return out;
}

RunResult run_cbn(const Term& t, const StdTrace& trace, std::size_t budget) {
  return run_loop<RunResult>(Mode::CbN, t, trace, budget);
}

RunResult run_cbv(const Term& t, const StdTrace& trace, std::size_t budget) {
  return run_loop<RunResult>(Mode::CbV, t, trace, budget);
}

CountResult run_counting(const Term& body, const StdTrace& trace, std::size_t budget) {
  return run_loop<CountResult>(Mode::Counting, body, trace, budget);
}

}  // namespace spcf
