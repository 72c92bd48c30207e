#include "spcf/term.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

namespace spcf {

PrimOp prim_add() { return PrimOp{"add", 2, PrimKind::Linear, Rat(0)}; }
PrimOp prim_sub() { return PrimOp{"sub", 2, PrimKind::Linear, Rat(0)}; }
PrimOp prim_neg() { return PrimOp{"neg", 1, PrimKind::Linear, Rat(0)}; }
PrimOp prim_mulc(const Rat& q) { return PrimOp{"mulc", 1, PrimKind::Linear, q}; }
PrimOp prim_min() { return PrimOp{"min", 2, PrimKind::Opaque, Rat(0)}; }
PrimOp prim_max() { return PrimOp{"max", 2, PrimKind::Opaque, Rat(0)}; }
PrimOp prim_sig() { return PrimOp{"sig", 1, PrimKind::Opaque, Rat(0)}; }

namespace {

constexpr unsigned kOpaqueBits = 64;

// exp(x) with a certified rational enclosure, |x| <= 48. Terms are kept as
// dyadics with an explicit error accumulator so denominators stay small.
void exp_bounds(const Rat& x, Rat& lo, Rat& hi) {
  Rat t = abs(x);
  // rounding error amplifies by at most e^|x| across the recurrence
  unsigned bits = kOpaqueBits + 48 + 2 * static_cast<unsigned>(t.get_d() + 1);
  Rat eps = Rat(1) / (mpz_class(1) << bits);
  Rat term(1), sum(1), err(0), sum_err(0);
  int k = 0;
  for (;;) {
    ++k;
    term = dyadic_floor(term * x / k, bits);          // |rounding| <= eps
    err = dyadic_ceil(err * t / k, bits) + 2 * eps;   // |term - x^k/k!| <= err
    sum += term;
    sum_err += err;
    if (Rat(k + 1) >= 2 * t && abs(term) <= eps) break;
  }
  // geometric tail: |x|/(k+1) <= 1/2, so the remainder is below |term_k|+err
  Rat slack = sum_err + abs(term) + err;
  lo = sum - slack;
  hi = sum + slack;
}

// Enclosure of sig(x) = 1/(1+exp(-x)), outward-rounded to 64-bit dyadics.
// Evaluations recur on the same handful of endpoints, so results are cached.
void sig_bounds_uncached(const Rat& x, Rat& lo, Rat& hi) {
  Rat tiny = Rat(1) / (mpz_class(1) << kOpaqueBits);
  if (x >= 48) {
    lo = 1 - tiny;
    hi = 1;
    return;
  }
  if (x <= -48) {
    lo = 0;
    hi = tiny;
    return;
  }
  Rat elo, ehi;
  exp_bounds(-x, elo, ehi);
  if (elo < 0) elo = 0;
  Rat slo = Rat(1) / (1 + ehi);
  Rat shi = Rat(1) / (1 + elo);
  lo = dyadic_floor(slo, kOpaqueBits);
  hi = dyadic_ceil(shi, kOpaqueBits);
  if (lo < 0) lo = 0;
  if (hi > 1) hi = 1;
}

void sig_bounds(const Rat& x, Rat& lo, Rat& hi) {
  static std::mutex mu;
  static std::map<Rat, std::pair<Rat, Rat>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(x);
    if (it != cache.end()) {
      lo = it->second.first;
      hi = it->second.second;
      return;
    }
  }
  sig_bounds_uncached(x, lo, hi);
  std::lock_guard<std::mutex> lock(mu);
  if (cache.size() > 4096) cache.clear();
  cache.emplace(x, std::make_pair(lo, hi));
}

}  // namespace

Interval prim_image(const PrimOp& f, const std::vector<Interval>& args) {
  if (static_cast<int>(args.size()) != f.arity) throw std::invalid_argument("prim arity mismatch: " + f.name);
  if (f.name == "add") return Interval(args[0].lo + args[1].lo, args[0].hi + args[1].hi);
  if (f.name == "sub") return Interval(args[0].lo - args[1].hi, args[0].hi - args[1].lo);
  if (f.name == "neg") return Interval(-args[0].hi, -args[0].lo);
  if (f.name == "mulc") {
    if (f.scale >= 0) return Interval(f.scale * args[0].lo, f.scale * args[0].hi);
    return Interval(f.scale * args[0].hi, f.scale * args[0].lo);
  }
  if (f.name == "min")
    return Interval(std::min(args[0].lo, args[1].lo), std::min(args[0].hi, args[1].hi));
  if (f.name == "max")
    return Interval(std::max(args[0].lo, args[1].lo), std::max(args[0].hi, args[1].hi));
  if (f.name == "sig") {
    Rat l1, h1, l2, h2;
    sig_bounds(args[0].lo, l1, h1);
    sig_bounds(args[0].hi, l2, h2);
    return Interval(l1, h2);  // monotone increasing
  }
  throw std::invalid_argument("unknown primitive: " + f.name);
}

Rat prim_eval(const PrimOp& f, const std::vector<Rat>& args) {
  if (static_cast<int>(args.size()) != f.arity) throw std::invalid_argument("prim arity mismatch: " + f.name);
  if (f.name == "add") return args[0] + args[1];
  if (f.name == "sub") return args[0] - args[1];
  if (f.name == "neg") return -args[0];
  if (f.name == "mulc") return f.scale * args[0];
  if (f.name == "min") return std::min(args[0], args[1]);
  if (f.name == "max") return std::max(args[0], args[1]);
  if (f.name == "sig") {
    Rat lo, hi;
    sig_bounds(args[0], lo, hi);
    return (lo + hi) / 2;
  }
  throw std::invalid_argument("unknown primitive: " + f.name);
}

namespace {
Term make(TermNode node) { return std::make_shared<const TermNode>(std::move(node)); }
}  // namespace

Term mk_var(std::string name) {
  TermNode n;
  n.tag = Tag::Var;
  n.name = std::move(name);
  return make(std::move(n));
}

Term mk_num(const Rat& r) {
  TermNode n;
  n.tag = Tag::Num;
  n.num = Interval(r, r);
  return make(std::move(n));
}

Term mk_interval_num(const Rat& lo, const Rat& hi) {
  if (lo > hi) throw std::invalid_argument("interval numeral requires lo <= hi");
  TermNode n;
  n.tag = Tag::IntervalNum;
  n.num = Interval(lo, hi);
  return make(std::move(n));
}

Term mk_lam(std::string x, Term body) {
  TermNode n;
  n.tag = Tag::Lam;
  n.name = std::move(x);
  n.kids = {std::move(body)};
  return make(std::move(n));
}

Term mk_fix(std::string f, std::string x, Term body) {
  TermNode n;
  n.tag = Tag::Fix;
  n.fun_name = std::move(f);
  n.name = std::move(x);
  n.kids = {std::move(body)};
  return make(std::move(n));
}

Term mk_app(Term fn, Term arg) {
  TermNode n;
  n.tag = Tag::App;
  n.kids = {std::move(fn), std::move(arg)};
  return make(std::move(n));
}

Term mk_if(Term guard, Term then_t, Term else_t) {
  TermNode n;
  n.tag = Tag::If;
  n.kids = {std::move(guard), std::move(then_t), std::move(else_t)};
  return make(std::move(n));
}

Term mk_prim(PrimOp f, std::vector<Term> args) {
  if (static_cast<int>(args.size()) != f.arity) throw std::invalid_argument("prim arity mismatch: " + f.name);
  TermNode n;
  n.tag = Tag::Prim;
  n.prim = std::move(f);
  n.kids = std::move(args);
  return make(std::move(n));
}

Term mk_sample() {
  TermNode n;
  n.tag = Tag::Sample;
  return make(std::move(n));
}

Term mk_score(Term arg) {
  TermNode n;
  n.tag = Tag::Score;
  n.kids = {std::move(arg)};
  return make(std::move(n));
}

Term mk_sample_var(std::size_t index) {
  TermNode n;
  n.tag = Tag::SampleVar;
  n.sample_index = index;
  return make(std::move(n));
}

Term mk_boxed_prim(PrimOp f, std::vector<Term> args) {
  TermNode n;
  n.tag = Tag::BoxedPrim;
  n.prim = std::move(f);
  n.kids = std::move(args);
  return make(std::move(n));
}

Term mk_star() {
  TermNode n;
  n.tag = Tag::StarValue;
  return make(std::move(n));
}

Term mk_unknown_arg() {
  TermNode n;
  n.tag = Tag::UnknownArg;
  return make(std::move(n));
}

Term mk_hole_mu() {
  TermNode n;
  n.tag = Tag::HoleMu;
  return make(std::move(n));
}

bool is_value(const Term& t) {
  switch (t->tag) {
    case Tag::Num:
    case Tag::IntervalNum:
    case Tag::Lam:
    case Tag::Fix:
    case Tag::Var:
    case Tag::SampleVar:
    case Tag::BoxedPrim:
    case Tag::StarValue:
    case Tag::UnknownArg:
    case Tag::HoleMu:
      return true;
    default:
      return false;
  }
}

bool is_numeral(const Term& t) { return t->tag == Tag::Num || t->tag == Tag::IntervalNum; }

bool term_equal(const Term& a, const Term& b) {
  if (a.get() == b.get()) return true;
  if (a->tag != b->tag) return false;
  if (a->name != b->name || a->fun_name != b->fun_name) return false;
  if (a->tag == Tag::Num || a->tag == Tag::IntervalNum) {
    if (a->num != b->num) return false;
  }
  if (a->tag == Tag::SampleVar && a->sample_index != b->sample_index) return false;
  if (a->tag == Tag::Prim || a->tag == Tag::BoxedPrim) {
    if (!(a->prim == b->prim)) return false;
  }
  if (a->kids.size() != b->kids.size()) return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i) {
    if (!term_equal(a->kids[i], b->kids[i])) return false;
  }
  return true;
}

bool contains_tag(const Term& t, Tag tag) {
  if (t->tag == tag) return true;
  for (const auto& k : t->kids) {
    if (contains_tag(k, tag)) return true;
  }
  return false;
}

std::size_t count_tag(const Term& t, Tag tag) {
  std::size_t n = t->tag == tag ? 1 : 0;
  for (const auto& k : t->kids) n += count_tag(k, tag);
  return n;
}

namespace {

void free_vars_rec(const Term& t, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (t->tag) {
    case Tag::Var:
      if (!bound.count(t->name)) out.insert(t->name);
      return;
    case Tag::Lam: {
      bool fresh = bound.insert(t->name).second;
      free_vars_rec(t->kids[0], bound, out);
      if (fresh) bound.erase(t->name);
      return;
    }
    case Tag::Fix: {
      bool fx = bound.insert(t->name).second;
      bool ff = bound.insert(t->fun_name).second;
      free_vars_rec(t->kids[0], bound, out);
      if (fx) bound.erase(t->name);
      if (ff) bound.erase(t->fun_name);
      return;
    }
    default:
      for (const auto& k : t->kids) free_vars_rec(k, bound, out);
  }
}

std::set<std::string> free_vars(const Term& t) {
  std::set<std::string> bound, out;
  free_vars_rec(t, bound, out);
  return out;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  std::string cand = base + "'";
  int i = 0;
  while (avoid.count(cand)) cand = base + "'" + std::to_string(++i);
  return cand;
}

Term subst_rec(const Term& t, const std::map<std::string, Term>& bind) {
  if (bind.empty()) return t;
  switch (t->tag) {
    case Tag::Var: {
      auto it = bind.find(t->name);
      return it == bind.end() ? t : it->second;
    }
    case Tag::Lam: {
      auto inner = bind;
      inner.erase(t->name);
      if (inner.empty()) return t;
      std::set<std::string> clash;
      for (const auto& [k, v] : inner) {
        (void)k;
        auto fv = free_vars(v);
        clash.insert(fv.begin(), fv.end());
      }
      std::string x = t->name;
      Term body = t->kids[0];
      if (clash.count(x)) {
        auto avoid = clash;
        auto bfv = free_vars(body);
        avoid.insert(bfv.begin(), bfv.end());
        std::string x2 = fresh_name(x, avoid);
        body = subst_rec(body, {{x, mk_var(x2)}});
        x = x2;
      }
      return mk_lam(x, subst_rec(body, inner));
    }
    case Tag::Fix: {
      auto inner = bind;
      inner.erase(t->name);
      inner.erase(t->fun_name);
      if (inner.empty()) return t;
      std::set<std::string> clash;
      for (const auto& [k, v] : inner) {
        (void)k;
        auto fv = free_vars(v);
        clash.insert(fv.begin(), fv.end());
      }
      std::string x = t->name, f = t->fun_name;
      Term body = t->kids[0];
      if (clash.count(x) || clash.count(f)) {
        auto avoid = clash;
        auto bfv = free_vars(body);
        avoid.insert(bfv.begin(), bfv.end());
        std::map<std::string, Term> ren;
        if (clash.count(x)) {
          std::string x2 = fresh_name(x, avoid);
          avoid.insert(x2);
          ren[x] = mk_var(x2);
          x = x2;
        }
        if (clash.count(f)) {
          std::string f2 = fresh_name(f, avoid);
          ren[f] = mk_var(f2);
          f = f2;
        }
        body = subst_rec(body, ren);
      }
      return mk_fix(f, x, subst_rec(body, inner));
    }
    default: {
      if (t->kids.empty()) return t;
      TermNode n = *t;
      for (auto& k : n.kids) k = subst_rec(k, bind);
      return make(std::move(n));
    }
  }
}

}  // namespace

Term substitute(const Term& t, const std::map<std::string, Term>& bindings) {
  return subst_rec(t, bindings);
}

namespace {

// Printing precedence levels; mirrors the parser.
enum Prec { kLow = 0, kChoice = 10, kCompare = 20, kAdd = 30, kMul = 40, kApp = 50, kAtom = 60 };

void print_rec(const Term& t, int min_prec, std::string& out);

void wrap(bool need, const Term& t, int inner, std::string& out) {
  if (need) out.push_back('(');
  print_rec(t, inner, out);
  if (need) out.push_back(')');
}

void print_rec(const Term& t, int min_prec, std::string& out) {
  switch (t->tag) {
    case Tag::Var:
      out += t->name;
      return;
    case Tag::Num:
      if (t->num.lo < 0) {
        out += "(-" + rat_to_string(-t->num.lo) + ")";
      } else {
        out += rat_to_string(t->num.lo);
      }
      return;
    case Tag::IntervalNum:
      out += interval_to_string(t->num);
      return;
    case Tag::Sample:
      out += "sample";
      return;
    case Tag::SampleVar:
      out += "$" + std::to_string(t->sample_index);
      return;
    case Tag::StarValue:
      out += "<unknown>";
      return;
    case Tag::UnknownArg:
      out += "<arg>";
      return;
    case Tag::HoleMu:
      out += "<rec>";
      return;
    case Tag::Score:
      out += "score(";
      print_rec(t->kids[0], kLow, out);
      out += ")";
      return;
    case Tag::Lam: {
      bool p = min_prec > kLow;
      if (p) out.push_back('(');
      out += "\\" + t->name + ". ";
      print_rec(t->kids[0], kLow, out);
      if (p) out.push_back(')');
      return;
    }
    case Tag::Fix: {
      bool p = min_prec > kLow;
      if (p) out.push_back('(');
      out += "fix " + t->fun_name + " " + t->name + ". ";
      print_rec(t->kids[0], kLow, out);
      if (p) out.push_back(')');
      return;
    }
    case Tag::If: {
      bool p = min_prec > kLow;
      if (p) out.push_back('(');
      out += "if ";
      print_rec(t->kids[0], kLow, out);
      out += " then ";
      print_rec(t->kids[1], kLow, out);
      out += " else ";
      print_rec(t->kids[2], kLow, out);
      if (p) out.push_back(')');
      return;
    }
    case Tag::App: {
      bool p = min_prec > kApp;
      if (p) out.push_back('(');
      print_rec(t->kids[0], kApp, out);
      out.push_back(' ');
      print_rec(t->kids[1], kApp + 1, out);
      if (p) out.push_back(')');
      return;
    }
    case Tag::Prim:
    case Tag::BoxedPrim: {
      const std::string& f = t->prim.name;
      if (f == "add" || f == "sub") {
        bool p = min_prec > kAdd;
        if (p) out.push_back('(');
        print_rec(t->kids[0], kAdd, out);
        out += f == "add" ? " + " : " - ";
        print_rec(t->kids[1], kAdd + 1, out);
        if (p) out.push_back(')');
        return;
      }
      if (f == "mulc") {
        bool p = min_prec > kMul;
        if (p) out.push_back('(');
        if (t->prim.scale < 0) {
          out += "(-" + rat_to_string(-t->prim.scale) + ")";
        } else {
          out += rat_to_string(t->prim.scale);
        }
        out += " * ";
        print_rec(t->kids[0], kMul + 1, out);
        if (p) out.push_back(')');
        return;
      }
      out += f;
      out.push_back('(');
      for (std::size_t i = 0; i < t->kids.size(); ++i) {
        if (i) out += ", ";
        print_rec(t->kids[i], kLow, out);
      }
      out.push_back(')');
      return;
    }
  }
}

}  // namespace

std::string term_to_string(const Term& t) {
  std::string out;
  print_rec(t, kLow, out);
  return out;
}

}  // namespace spcf
