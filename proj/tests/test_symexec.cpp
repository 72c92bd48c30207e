#include <doctest.h>

#include <random>
#include <set>

#include "spcf/measure.hpp"
#include "spcf/parser.hpp"
#include "spcf/semantics.hpp"
#include "spcf/symexec.hpp"

using namespace spcf;

namespace {

Oracle oracle(const std::string& s) {
  Oracle o;
  for (char c : s) o.push_back(c == 'L' ? Dir::L : Dir::R);
  return o;
}

}  // namespace

TEST_CASE("single conditional records the branch constraint") {
  Term t = mk_if(mk_prim(prim_sub(), {mk_sample(), mk_num(Rat(1, 2))}), mk_num(0), mk_num(1));
  SymRun r = symbolic_run(t, oracle("L"));
  REQUIRE(r.kind == SymRun::Done);
  CHECK(term_equal(r.value, mk_num(0)));
  CHECK(r.constraints.var_count == 1);
  REQUIRE(r.constraints.items.size() == 1);
  CHECK(r.constraints.items[0].rel == Rel::LeqZero);
  CHECK(term_equal(r.constraints.items[0].value,
                   mk_boxed_prim(prim_sub(), {mk_sample_var(0), mk_num(Rat(1, 2))})));
}

TEST_CASE("two-sample conditional with a constant inner guard") {
  // if (sample + sample - 1) then x else (if 0 then 3 else 4), oracle RL
  Term t = parse("if sample + sample - 1 then 9 else (if 0 then 3 else 4)");
  SymRun r = symbolic_run(t, oracle("RL"));
  REQUIRE(r.kind == SymRun::Done);
  CHECK(term_equal(r.value, mk_num(3)));
  CHECK(r.constraints.var_count == 2);
  REQUIRE(r.constraints.items.size() == 2);
  CHECK(r.constraints.items[0].rel == Rel::GtZero);
  CHECK(r.constraints.items[1].rel == Rel::LeqZero);
  CHECK(term_equal(r.constraints.items[1].value, mk_num(0)));
  CHECK_FALSE(r.constraints.trivially_unsat);  // 0 <= 0 holds
}

TEST_CASE("values succeed on the empty oracle, leftovers are NoPath") {
  SymRun r = symbolic_run(mk_num(5), {});
  REQUIRE(r.kind == SymRun::Done);
  CHECK(r.constraints.items.empty());
  CHECK(r.constraints.var_count == 0);

  r = symbolic_run(mk_num(5), oracle("L"));
  CHECK(r.kind == SymRun::NoPath);

  r = symbolic_run(parse("if sample then 0 else 1"), {});
  CHECK(r.kind == SymRun::NoPath);  // oracle exhausted at the conditional
}

TEST_CASE("score records a nonnegativity constraint") {
  SymRun r = symbolic_run(parse("score(sample - 1/2)"), {});
  REQUIRE(r.kind == SymRun::Done);
  REQUIRE(r.constraints.items.size() == 1);
  CHECK(r.constraints.items[0].rel == Rel::GeqZero);
}

TEST_CASE("frontier yields terminating oracles breadth first") {
  Term geo = parse("(fix f x. if sample <= 1/2 then x else f(x + 1)) 0");
  OracleFrontier f(geo, 30);
  std::vector<PathResult> paths;
  while (auto p = f.next()) paths.push_back(std::move(*p));
  // 5j + 4 <= 30 admits j = 0..5
  REQUIRE(paths.size() == 6);
  for (std::size_t j = 0; j < paths.size(); ++j) {
    CHECK(paths[j].oracle.size() == j + 1);
    CHECK(paths[j].steps == 5 * j + 4);
    CHECK(paths[j].constraints.var_count == j + 1);
    // oracle is R...RL
    for (std::size_t i = 0; i + 1 < paths[j].oracle.size(); ++i) CHECK(paths[j].oracle[i] == Dir::R);
    CHECK(paths[j].oracle.back() == Dir::L);
  }
}

TEST_CASE("frontier steps agree with symbolic_run on the same oracle") {
  Term gr = parse("(fix f x. x (+) f^3(x)) 0");
  OracleFrontier f(gr, 40);
  std::size_t count = 0;
  while (auto p = f.next()) {
    SymRun r = symbolic_run(gr, p->oracle);
    REQUIRE(r.kind == SymRun::Done);
    CHECK(r.steps == p->steps);
    CHECK(r.constraints.var_count == p->constraints.var_count);
    CHECK(r.constraints.items.size() == p->constraints.items.size());
    ++count;
  }
  CHECK(count > 0);
}

TEST_CASE("box classification") {
  // alpha0 - 1/2 <= 0
  ConstraintSet leq;
  leq.var_count = 1;
  leq.items.push_back(
      Constraint{mk_boxed_prim(prim_sub(), {mk_sample_var(0), mk_num(Rat(1, 2))}), Rel::LeqZero});
  CHECK(check_box(leq, {Interval(Rat(0), Rat(1, 4))}) == BoxClass::Inside);
  CHECK(check_box(leq, {Interval(Rat(3, 4), Rat(1))}) == BoxClass::Outside);
  CHECK(check_box(leq, {Interval(Rat(0), Rat(1))}) == BoxClass::Straddle);

  // alpha0 + alpha1 - 1 <= 0 straddles the unit box
  ConstraintSet tri;
  tri.var_count = 2;
  tri.items.push_back(Constraint{
      mk_boxed_prim(prim_sub(),
                    {mk_boxed_prim(prim_add(), {mk_sample_var(0), mk_sample_var(1)}), mk_num(1)}),
      Rel::LeqZero});
  CHECK(check_box(tri, {Interval(Rat(0), Rat(1)), Interval(Rat(0), Rat(1))}) == BoxClass::Straddle);

  // strict constraint: alpha0 - 1/2 > 0 fails on [0, 1/4]
  ConstraintSet gt;
  gt.var_count = 1;
  gt.items.push_back(
      Constraint{mk_boxed_prim(prim_sub(), {mk_sample_var(0), mk_num(Rat(1, 2))}), Rel::GtZero});
  CHECK(check_box(gt, {Interval(Rat(0), Rat(1, 4))}) == BoxClass::Outside);
}

TEST_CASE("partition property: inside boxes replay the recorded oracle") {
  // every sampled point from an inside box terminates with the recorded step
  // count, and is outside every other explored oracle of the same length
  Term gr = parse("(fix f x. x (+) f^3(x)) 0");
  OracleFrontier f(gr, 40);
  std::vector<PathResult> paths;
  while (auto p = f.next()) paths.push_back(std::move(*p));
  REQUIRE(paths.size() >= 2);

  std::mt19937_64 rng(23);
  for (const auto& path : paths) {
    // find an inside box by sweeping a little
    SweepOptions opts;
    opts.target_gap = Rat(1, 4);
    opts.collect_boxes = true;
    SweepResult sw = sweep_measure(path.constraints, opts);
    if (sw.inside.empty()) continue;
    const VarBox& box = sw.inside.front();
    for (int rep = 0; rep < 200; ++rep) {
      StdTrace trace;
      for (const auto& iv : box) {
        std::uint64_t k = rng() >> 12;
        Rat u(2 * mpz_class(k) + 1, mpz_class(1) << 53);
        trace.push_back(iv.lo + (iv.hi - iv.lo) * u);
      }
      RunResult rr = run_cbn(gr, trace);
      REQUIRE(rr.status == RunStatus::Value);
      CHECK(rr.steps == path.steps);
      // the same point is outside every other path of equal sample count
      VarBox point;
      for (const auto& r : trace) point.emplace_back(r, r);
      for (const auto& other : paths) {
        if (&other == &path) continue;
        if (other.constraints.var_count != path.constraints.var_count) continue;
        CHECK(check_box(other.constraints, point) == BoxClass::Outside);
      }
    }
  }
}
