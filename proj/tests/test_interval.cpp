#include <doctest.h>

#include <random>

#include "spcf/interval_sem.hpp"
#include "spcf/parser.hpp"

using namespace spcf;

namespace {

IntervalTrace itr(std::initializer_list<std::pair<Rat, Rat>> xs) {
  IntervalTrace t;
  for (const auto& [a, b] : xs) t.parts.emplace_back(a, b);
  return t;
}

}  // namespace

TEST_CASE("embedding boxes every numeral") {
  CHECK(term_equal(embed(mk_num(3)), mk_interval_num(3, 3)));
  CHECK(term_equal(embed(mk_sample()), mk_sample()));
  Term prog = parse("(fix f x. if sample <= 1/2 then x else f(x + 1)) 1");
  Term e = embed(prog);
  CHECK_FALSE(contains_tag(e, Tag::Num));
  CHECK(count_tag(e, Tag::IntervalNum) == count_tag(prog, Tag::Num));
}

TEST_CASE("interval steps") {
  Interval head(Rat(0), Rat(1, 2));
  IStepOutcome s = step_interval(mk_sample(), &head);
  REQUIRE(s.kind == IStepOutcome::Stepped);
  CHECK(term_equal(s.next, mk_interval_num(0, Rat(1, 2))));

  // decided guard: negative interval goes left
  s = step_interval(mk_if(mk_interval_num(-1, Rat(-1, 2)), mk_num(7), mk_num(8)), nullptr);
  REQUIRE(s.kind == IStepOutcome::Stepped);
  CHECK(term_equal(s.next, mk_num(7)));

  // straddling guard is indeterminate
  s = step_interval(mk_if(mk_interval_num(-1, 1), mk_num(7), mk_num(8)), nullptr);
  CHECK(s.kind == IStepOutcome::Indeterminate);

  // score straddling zero asks for refinement, fully negative sticks
  s = step_interval(mk_score(mk_interval_num(-1, 1)), nullptr);
  CHECK(s.kind == IStepOutcome::Indeterminate);
  s = step_interval(mk_score(mk_interval_num(-2, -1)), nullptr);
  CHECK(s.kind == IStepOutcome::Stuck);

  // endpoint sums
  s = step_interval(mk_prim(prim_add(), {mk_interval_num(0, 1), mk_interval_num(0, 1)}), nullptr);
  REQUIRE(s.kind == IStepOutcome::Stepped);
  CHECK(term_equal(s.next, mk_interval_num(0, 2)));
}

TEST_CASE("interval image encloses sampled points for every primitive") {
  std::mt19937_64 rng(11);
  auto rnd = [&](const Rat& lo, const Rat& hi) -> Rat {
    std::uint64_t k = rng() >> 12;
    Rat u(2 * mpz_class(k) + 1, mpz_class(1) << 53);
    return lo + (hi - lo) * u;
  };
  std::vector<PrimOp> ops{prim_add(), prim_sub(), prim_neg(), prim_mulc(Rat(-3, 7)),
                          prim_min(), prim_max(), prim_sig()};
  for (const auto& op : ops) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<Interval> box;
      for (int i = 0; i < op.arity; ++i) {
        Rat a = rnd(Rat(-2), Rat(2)), b = rnd(Rat(-2), Rat(2));
        if (b < a) std::swap(a, b);
        box.emplace_back(a, b);
      }
      Interval img = prim_image(op, box);
      for (int s = 0; s < 100; ++s) {
        std::vector<Rat> point;
        for (const auto& iv : box) point.push_back(rnd(iv.lo, iv.hi));
        Rat v = prim_eval(op, point);
        CHECK(img.lo <= v);
        CHECK(v <= img.hi);
      }
    }
  }
}

TEST_CASE("compatibility") {
  IntervalTrace a = itr({{Rat(0), Rat(1)}, {Rat(0), Rat(1, 3)}});
  IntervalTrace b = itr({{Rat(0), Rat(1)}, {Rat(1, 3), Rat(1, 2)}});
  IntervalTrace c = itr({{Rat(0), Rat(1)}});
  CHECK(compatible(a, b));      // almost disjoint second position
  CHECK(compatible(a, c));      // different lengths
  CHECK_FALSE(compatible(a, a));  // positive-weight self overlap
}

TEST_CASE("strong split refines the documented example") {
  IntervalTrace p1 = itr({{Rat(0), Rat(1, 2)}, {Rat(0), Rat(1, 2)}});
  IntervalTrace p2 = itr({{Rat(0), Rat(1, 3)}, {Rat(1, 2), Rat(1)}});
  auto out = strong_split({p1, p2});
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j) CHECK(strongly_compatible(out[i], out[j]));
  // exact weight preservation
  Rat before = p1.weight() + p2.weight();
  Rat after(0);
  for (const auto& t : out) after += t.weight();
  CHECK(before == after);
  // the three expected pieces
  auto expect = std::vector<IntervalTrace>{itr({{Rat(0), Rat(1, 3)}, {Rat(0), Rat(1, 2)}}),
                                           itr({{Rat(1, 3), Rat(1, 2)}, {Rat(0), Rat(1, 2)}}),
                                           itr({{Rat(0), Rat(1, 3)}, {Rat(1, 2), Rat(1)}})};
  for (const auto& want : expect) {
    bool found = false;
    for (const auto& got : out)
      if (got == want) found = true;
    CHECK_MESSAGE(found, trace_to_string(want));
  }
}

TEST_CASE("strong split: singletons and overlapping pairs") {
  IntervalTrace p = itr({{Rat(0), Rat(1)}});
  auto out = strong_split({p});
  REQUIRE(out.size() == 1);
  CHECK(out[0] == p);

  // two overlapping length-1 intervals split into at most 3 pieces of the
  // same total length
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    auto rnd = [&] {
      return rat(static_cast<long>(rng() % 97), 96);
    };
    Rat a = rnd(), b = rnd(), c = rnd(), d = rnd();
    if (b < a) std::swap(a, b);
    if (d < c) std::swap(c, d);
    if (b == a || c == d) continue;
    IntervalTrace x = itr({{a, b}}), y = itr({{c, d}});
    if (!compatible(x, y)) continue;
    auto pieces = strong_split({x, y});
    CHECK(pieces.size() <= 3);
    Rat total(0);
    for (const auto& t : pieces) total += t.weight();
    CHECK(total == x.weight() + y.weight());
  }
}

TEST_CASE("strong split preserves weight on random compatible families") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    // random pairwise compatible family built from a random partition depth
    std::vector<IntervalTrace> fam;
    int n = 2 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      IntervalTrace t;
      std::size_t len = 1 + i;  // distinct lengths: pairwise compatible
      for (std::size_t j = 0; j < len; ++j) {
        long lo = static_cast<long>(rng() % 5);
        long w = 1 + static_cast<long>(rng() % (8 - lo > 0 ? 8 - lo : 1));
        t.parts.emplace_back(rat(lo, 8), rat(std::min(lo + w, 8l), 8));
      }
      fam.push_back(std::move(t));
    }
    Rat before(0);
    for (const auto& t : fam) before += t.weight();
    auto out = strong_split(fam);
    Rat after(0);
    for (const auto& t : out) after += t.weight();
    CHECK(before == after);
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = i + 1; j < out.size(); ++j)
        CHECK_MESSAGE(strongly_compatible(out[i], out[j]),
                      (trace_to_string(out[i]) + " vs " + trace_to_string(out[j])));
  }
}

TEST_CASE("run_interval terminates boxes and counts steps like the plain run") {
  Term geo = parse("(fix f x. if sample <= 1/2 then x else f(x + 1)) 1");
  Term e = embed(geo);
  IRunResult r = run_interval(e, itr({{Rat(0), Rat(1, 2)}}));
  REQUIRE(r.status == IRunStatus::Terminates);
  CHECK(r.steps == 4);
  // one recursion: right branch box, then a return box
  r = run_interval(e, itr({{Rat(1, 2), Rat(1)}, {Rat(0), Rat(1, 2)}}));
  REQUIRE(r.status == IRunStatus::Terminates);
  CHECK(r.steps == 9);
  // straddling box is indeterminate
  r = run_interval(e, itr({{Rat(1, 4), Rat(3, 4)}}));
  CHECK(r.status == IRunStatus::Indeterminate);
}

TEST_CASE("sampled refinements agree with the interval run exactly") {
  Term geo = parse("(fix f x. if sample <= 1/2 then x else f(x + 1)) 1");
  RefinementReport rep =
      refinement_check(geo, itr({{Rat(1, 2), Rat(1)}, {Rat(0), Rat(1, 2)}}), 500, 42);
  CHECK(rep.trace_terminates);
  CHECK(rep.expected_steps == 9);
  CHECK(rep.violations == 0);
  CHECK(rep.samples == 500);
}
