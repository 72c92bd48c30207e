#include <doctest.h>

#include <string>

#include "spcf/interval_sem.hpp"
#include "spcf/itypes.hpp"
#include "spcf/lowerbound.hpp"
#include "spcf/parser.hpp"

using namespace spcf;

namespace {

Term corpus(const std::string& name) { return parse_file(std::string(SPCF_CORPUS_DIR) + "/" + name); }

Derivation mk_node(DRule rule, Term subject, SetType conclusion, std::vector<Derivation> premises) {
  auto n = std::make_shared<DerivationNode>();
  n->rule = rule;
  n->subject = std::move(subject);
  n->conclusion = std::move(conclusion);
  n->premises = std::move(premises);
  return n;
}

std::vector<IntervalTrace> geo_boxes(std::size_t k) {
  // j recursions: [1/2,1]^j [0,1/2]
  std::vector<IntervalTrace> out;
  for (std::size_t j = 0; j < k; ++j) {
    IntervalTrace t;
    for (std::size_t i = 0; i < j; ++i) t.parts.emplace_back(Rat(1, 2), Rat(1));
    t.parts.emplace_back(Rat(0), Rat(1, 2));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

TEST_CASE("omega and expectation") {
  SetType empty;
  CHECK(omega(empty) == 0);
  CHECK(expectation(empty) == 0);

  IntervalTrace half;
  half.parts.emplace_back(Rat(0), Rat(1, 2));
  SetType one{SetTypeElem{itype_interval(Interval(Rat(0), Rat(1, 2))), half, 3}};
  CHECK(omega(one) == Rat(1, 2));
  CHECK(expectation(one) == Rat(3, 2));
}

TEST_CASE("single numeral node checks") {
  Term three = mk_interval_num(3, 3);
  Derivation d = mk_node(DRule::Num, three,
                         SetType{SetTypeElem{itype_interval(Interval(3, 3)), IntervalTrace{}, 0}}, {});
  CHECK(check_derivation(d).ok);

  // wrong count is rejected
  Derivation bad = mk_node(DRule::Num, three,
                           SetType{SetTypeElem{itype_interval(Interval(3, 3)), IntervalTrace{}, 1}}, {});
  CHECK_FALSE(check_derivation(bad).ok);
}

TEST_CASE("empty rule types anything") {
  Derivation d = mk_node(DRule::Empty, parse("(fix f x. f x) 0"), {}, {});
  CHECK(check_derivation(d).ok);
}

TEST_CASE("overlapping sample intervals are rejected") {
  IntervalTrace t1, t2;
  t1.parts.emplace_back(Rat(0), Rat(1, 2));
  t2.parts.emplace_back(Rat(1, 4), Rat(1));
  SetType concl{SetTypeElem{itype_interval(Interval(Rat(0), Rat(1, 2))), t1, 1},
                SetTypeElem{itype_interval(Interval(Rat(1, 4), Rat(1))), t2, 1}};
  Derivation d = mk_node(DRule::Sample, mk_sample(), concl, {});
  CheckReport rep = check_derivation(d);
  CHECK_FALSE(rep.ok);
  CHECK(rep.error.find("almost disjoint") != std::string::npos);
}

TEST_CASE("synthesis for a bare conditional") {
  Term t = parse("if sample - 1/2 then 0 else 1");
  std::vector<IntervalTrace> boxes;
  IntervalTrace l, r;
  l.parts.emplace_back(Rat(0), Rat(1, 2));
  r.parts.emplace_back(Rat(1, 2), Rat(1));
  boxes.push_back(l);
  boxes.push_back(r);
  Derivation d = synthesize(t, boxes);
  CHECK(check_derivation(d).ok);
  CHECK(omega(d->conclusion) == 1);
  // steps: sample, sub, if = 3 on both sides
  for (const auto& e : d->conclusion) CHECK(e.count == 3);
}

TEST_CASE("geometric round trip at several unfolding depths") {
  Term geo = corpus("geo_half.spcf");
  for (std::size_t k : {1, 2, 5, 10}) {
    auto boxes = geo_boxes(k);
    // the natural certificate is already pairwise strongly compatible
    for (std::size_t i = 0; i < boxes.size(); ++i)
      for (std::size_t j = i + 1; j < boxes.size(); ++j)
        REQUIRE(strongly_compatible(boxes[i], boxes[j]));
    Derivation d = synthesize(geo, boxes);
    CheckReport rep = check_derivation(d);
    CHECK_MESSAGE(rep.ok, rep.error);
    CHECK(omega(d->conclusion) == Rat((1l << k) - 1, 1l << k));
    // expected steps of the root type: sum 2^-(j+1) (5j+4)
    Rat expect(0);
    for (std::size_t j = 0; j < k; ++j)
      expect += Rat(1, 2) * Rat(1, 1l << j) * static_cast<long>(5 * j + 4);
    CHECK(expectation(d->conclusion) == expect);
  }
}

TEST_CASE("synthesis accepts strong-split certificates from the engine") {
  struct Job {
    const char* file;
    std::size_t depth;
  };
  // a spread of corpus terms: dyadic guards, non-dyadic sweeps, opaque
  // primitives, multi-variable constraints, scores
  for (const Job& job : std::initializer_list<Job>{{"geo_half.spcf", 29},
                                                   {"geo_fifth.spcf", 19},
                                                   {"gr.spcf", 16},
                                                   {"print2_quarter.spcf", 20},
                                                   {"prog2_half.spcf", 24},
                                                   {"1drw_half_1.spcf", 22},
                                                   {"pedestrian.spcf", 25},
                                                   {"sigmix_06.spcf", 25},
                                                   {"errmix_065.spcf", 28}}) {
    Term t = corpus(job.file);
    LowerBoundConfig cfg;
    cfg.max_depth = job.depth;
    cfg.emit_boxes = true;
    cfg.per_path_gap = Rat(1, 8);
    cfg.max_splits_per_path = 2000;
    LowerBoundResult r = lower_bound(t, cfg);
    if (r.certificate.empty()) continue;
    std::vector<IntervalTrace> boxes;
    for (const auto& e : r.certificate) boxes.push_back(e.trace);
    boxes = strong_split(boxes);
    Derivation d = synthesize(t, boxes);
    CheckReport rep = check_derivation(d);
    CHECK_MESSAGE(rep.ok, job.file, ": ", rep.error);
    CHECK_MESSAGE(omega(d->conclusion) == r.lb_probability, job.file);
  }
}

TEST_CASE("root traces replay in the interval machine with the recorded steps") {
  Term geo = corpus("geo_half.spcf");
  Derivation d = synthesize(geo, geo_boxes(4));
  REQUIRE(check_derivation(d).ok);
  Term m = embed(geo);
  for (const auto& e : d->conclusion) {
    IRunResult ir = run_interval(m, e.trace);
    REQUIRE(ir.status == IRunStatus::Terminates);
    CHECK(ir.steps == e.count);
  }
}

TEST_CASE("subset closure: dropping boxes still synthesizes and checks") {
  Term geo = corpus("geo_half.spcf");
  auto boxes = geo_boxes(5);
  boxes.erase(boxes.begin() + 1);
  boxes.erase(boxes.begin() + 2);
  Derivation d = synthesize(geo, boxes);
  CHECK(check_derivation(d).ok);
  Rat expect(0);
  for (const auto& b : boxes) expect += b.weight();
  CHECK(omega(d->conclusion) == expect);
}

TEST_CASE("synthesis covers primitives, scores and lets") {
  Term t = parse("let s = sample in score(s) + 1");
  IntervalTrace box;
  box.parts.emplace_back(Rat(1, 4), Rat(3, 4));
  Derivation d = synthesize(t, {box});
  CheckReport rep = check_derivation(d);
  CHECK_MESSAGE(rep.ok, rep.error);
  CHECK(omega(d->conclusion) == Rat(1, 2));
  REQUIRE(d->conclusion.size() == 1);
  // result interval is [1/4,3/4] + 1
  CHECK(d->conclusion[0].type->is_interval);
  CHECK(d->conclusion[0].type->iv == Interval(Rat(5, 4), Rat(7, 4)));
}

TEST_CASE("non-terminating traces are rejected") {
  Term geo = corpus("geo_half.spcf");
  IntervalTrace straddle;
  straddle.parts.emplace_back(Rat(1, 4), Rat(3, 4));
  CHECK_THROWS_AS(synthesize(geo, {straddle}), SynthesisError);
}

TEST_CASE("non-strongly-compatible inputs are rejected") {
  Term t = parse("if sample - 1/2 then sample else 0");
  IntervalTrace p1, p2;
  p1.parts.emplace_back(Rat(0), Rat(1, 2));
  p1.parts.emplace_back(Rat(0), Rat(1, 2));
  p2.parts.emplace_back(Rat(0), Rat(1, 3));
  p2.parts.emplace_back(Rat(1, 2), Rat(1));
  CHECK_THROWS_AS(synthesize(t, {p1, p2}), SynthesisError);
  // after a strong split they synthesize fine
  auto split = strong_split({p1, p2});
  Derivation d = synthesize(t, split);
  CHECK(check_derivation(d).ok);
  CHECK(omega(d->conclusion) == p1.weight() + p2.weight());
}

TEST_CASE("derivations serialize to JSON") {
  Term geo = corpus("geo_half.spcf");
  Derivation d = synthesize(geo, geo_boxes(2));
  std::string js = derivation_to_json(d);
  CHECK(js.find("\"rule\"") != std::string::npos);
  CHECK(js.find("\"premises\"") != std::string::npos);
}
