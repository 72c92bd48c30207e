#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "spcf/exectree.hpp"
#include "spcf/interval_sem.hpp"
#include "spcf/itypes.hpp"
#include "spcf/lowerbound.hpp"
#include "spcf/measure.hpp"
#include "spcf/parser.hpp"
#include "spcf/randomwalk.hpp"
#include "spcf/verifier.hpp"

using namespace spcf;

namespace {

Term corpus(const std::string& name) { return parse_file(std::string(SPCF_CORPUS_DIR) + "/" + name); }

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report(int criterion, bool pass, const std::string& what) {
  std::printf("ACCEPTANCE %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
}

std::string run_cli(const std::string& args) {
  std::string cmd = std::string(SPCF_BIN) + " " + args + " 2>&1";
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  pclose(p);
  return out;
}

}  // namespace

TEST_CASE("criterion 1: geometric program exact bound at depth 100") {
  Timer timer;
  LowerBoundConfig cfg;
  cfg.max_depth = 100;
  LowerBoundResult r = lower_bound(corpus("geo_half.spcf"), cfg);
  double secs = timer.seconds();
  bool exact = r.lb_probability == Rat((1 << 20) - 1, 1 << 20);
  bool decimal = rat_to_decimal(r.lb_probability) == "0.9999990463";
  bool fast = secs < 5.0;
  // the command line prints the same figure
  std::string cli = run_cli("lb \"" + std::string(SPCF_CORPUS_DIR) + "/geo_half.spcf\" --depth 100");
  bool cli_ok = cli.find("1048575/1048576") != std::string::npos &&
                cli.find("0.9999990463") != std::string::npos;
  CHECK(exact);
  CHECK(decimal);
  CHECK(fast);
  CHECK(cli_ok);
  report(1, exact && decimal && fast && cli_ok,
         "geo_half depth 100: lb = 1 - 2^-20 exactly (" + rat_to_decimal(r.lb_probability) + "), " +
             std::to_string(secs) + " s");
}

TEST_CASE("criterion 2: golden-ratio program at depth 80") {
  Timer timer;
  LowerBoundConfig cfg;
  cfg.max_depth = 80;
  LowerBoundResult r = lower_bound(corpus("gr.spcf"), cfg);
  double secs = timer.seconds();
  bool in_range = r.lb_probability >= Rat(60, 100) && r.lb_probability <= Rat(6180339888, 10000000000);
  bool fast = secs < 60.0;
  CHECK(in_range);
  CHECK(fast);
  report(2, in_range && fast,
         "gr depth 80: lb = " + rat_to_decimal(r.lb_probability) + " in [0.60, 0.6180339888], " +
             std::to_string(secs) + " s");
}

TEST_CASE("criterion 3: non-AST two-call-site program at depth 90") {
  LowerBoundConfig cfg;
  cfg.max_depth = 90;
  LowerBoundResult r = lower_bound(corpus("print2_quarter.spcf"), cfg);
  bool in_range = r.lb_probability >= Rat(30, 100) && r.lb_probability <= Rat(1, 3);
  CHECK(in_range);
  report(3, in_range,
         "print2_quarter depth 90: lb = " + rat_to_decimal(r.lb_probability) + " in [0.30, 1/3]");
}

TEST_CASE("criterion 4: exact worst-case counting distributions") {
  struct Row {
    const char* file;
    std::map<std::size_t, Rat> expect;
  };
  std::vector<Row> rows{
      {"geo_half.spcf", {{0, Rat(1, 2)}, {1, Rat(1, 2)}}},
      {"prog2_half.spcf", {{0, Rat(1, 2)}, {2, Rat(1, 2)}}},
      {"print3_23.spcf", {{0, Rat(2, 3)}, {3, Rat(1, 3)}}},
      {"sigmix_06.spcf", {{0, Rat(3, 5)}, {2, Rat(1, 5)}, {3, Rat(1, 5)}}},
      {"errmix_065.spcf", {{0, Rat(13, 20)}, {2, Rat(49, 800)}, {3, Rat(231, 800)}}},
  };
  bool all = true;
  std::string detail;
  for (const auto& row : rows) {
    Timer timer;
    AstVerdict v = verify_ast(corpus(row.file));
    double secs = timer.seconds();
    bool ok = v.decision == AstVerdict::Decision::Ast && v.approx.mass == row.expect && secs < 2.0;
    CHECK_MESSAGE(ok, row.file);
    if (!ok) {
      all = false;
      detail += std::string(" ") + row.file;
    }
  }
  report(4, all, all ? "five distributions match exactly, each under 2 s" : "mismatch:" + detail);
}

TEST_CASE("criterion 5: sharpness boundaries") {
  AstVerdict a = verify_ast(corpus("prog2_half.spcf"));
  AstVerdict b = verify_ast(corpus("prog2_49.spcf"));
  AstVerdict c = verify_ast(corpus("errmix_065.spcf"));
  AstVerdict d = verify_ast(corpus("errmix_064.spcf"));
  bool pass = a.decision == AstVerdict::Decision::Ast && b.decision == AstVerdict::Decision::Unknown &&
              !b.structural_failure && c.decision == AstVerdict::Decision::Ast &&
              d.decision == AstVerdict::Decision::Unknown && !d.structural_failure;
  CHECK(pass);
  report(5, pass, "AST at p = 1/2 and p = 0.65; Unknown at p = 0.49 and p = 0.64");
}

TEST_CASE("criterion 6: volume oracle") {
  bool simplices = true;
  long factorial = 1;
  for (long n = 1; n <= 5; ++n) {
    factorial *= n;
    Polytope p = unit_box_polytope(n);
    add_halfspace(p, std::vector<Rat>(n, Rat(1)), Rat(1));
    if (volume_exact(p) != Rat(1, factorial)) simplices = false;
  }
  Polytope q = unit_box_polytope(2);
  add_halfspace(q, {Rat(-1), Rat(0)}, Rat(-1, 2));  // e >= 1/2
  add_halfspace(q, {Rat(-1), Rat(1)}, Rat(0));      // z <= e
  bool wedge = volume_exact(q) == Rat(3, 8);
  CHECK(simplices);
  CHECK(wedge);
  report(6, simplices && wedge, "simplex volumes 1/n! for n = 1..5; boundary wedge = 3/8");
}

TEST_CASE("criterion 7: random-walk decision versus simulation") {
  std::mt19937_64 rng(4242);
  std::vector<StepDist> battery;
  auto sd = [](std::initializer_list<std::pair<long, Rat>> xs) {
    StepDist d;
    for (const auto& [z, w] : xs) d.mass[z] = w;
    return d;
  };
  battery.push_back(sd({{-1, Rat(1, 2)}, {1, Rat(1, 2)}}));
  battery.push_back(sd({{-1, Rat(2, 3)}, {2, Rat(1, 3)}}));
  battery.push_back(sd({{-1, Rat(4, 5)}, {4, Rat(1, 5)}}));
  for (int i = 0; i < 7; ++i) {
    long up = 1 + static_cast<long>(rng() % 4);
    Rat w_down(3, 5);
    Rat w_up = (Rat(1) - w_down) / 2;
    if (w_up * up >= w_down) w_up = w_down / (2 * up);
    battery.push_back(sd({{-1, w_down}, {up, w_up}, {0, Rat(1) - w_down - w_up}}));
  }
  for (int i = 0; i < 10; ++i) {
    long up = 1 + static_cast<long>(rng() % 2);
    Rat w_down = Rat(1, 4) + Rat(static_cast<long>(rng() % 3), 20);
    battery.push_back(sd({{-1, w_down}, {up, Rat(1) - w_down}}));
  }
  bool pass = battery.size() == 20;
  for (std::size_t i = 0; i < battery.size(); ++i) {
    AstDecision d = is_ast(battery[i]);
    double freq = simulate(battery[i], 1, 10000, 10000, 7000 + static_cast<std::uint64_t>(i));
    if (d.ast) {
      if (freq < 0.99) pass = false;
      CHECK_MESSAGE(freq >= 0.99, "case ", i);
    } else if (d.sum == 1 && d.drift >= Rat(1, 20)) {
      if (freq > 0.95) pass = false;
      CHECK_MESSAGE(freq <= 0.95, "case ", i);
    }
  }
  CHECK(pass);
  report(7, pass, "20 step distributions: absorption frequencies respect the verdicts");
}

TEST_CASE("criterion 8: interval-semantics soundness of every emitted certificate box") {
  struct Job {
    const char* file;
    std::size_t depth;
  };
  std::vector<Job> jobs{{"geo_half.spcf", 29},        {"geo_fifth.spcf", 19},  {"gr.spcf", 24},
                        {"print2_quarter.spcf", 24},  {"1drw_half_1.spcf", 22}, {"bin_half_2.spcf", 22},
                        {"pedestrian.spcf", 25},      {"sigmix_06.spcf", 25},  {"errmix_065.spcf", 28},
                        {"prog2_half.spcf", 24}};
  bool pass = true;
  std::size_t boxes = 0;
  std::uint64_t seed = 1;
  for (const auto& job : jobs) {
    Term t = corpus(job.file);
    LowerBoundConfig cfg;
    cfg.max_depth = job.depth;
    cfg.emit_boxes = true;
    cfg.per_path_gap = Rat(1, 8);
    cfg.max_splits_per_path = 2000;
    LowerBoundResult r = lower_bound(t, cfg);
    for (const auto& e : r.certificate) {
      ++boxes;
      RefinementReport rep = refinement_check(t, e.trace, 10000, seed++);
      bool ok = rep.trace_terminates && rep.expected_steps == e.steps && rep.violations == 0;
      if (!ok) pass = false;
      CHECK_MESSAGE(ok, job.file, " box ", trace_to_string(e.trace), " ", rep.detail);
    }
  }
  CHECK(boxes > 0);
  report(8, pass && boxes > 0,
         std::to_string(boxes) + " certificate boxes, 10^4 refinements each, zero violations");
}

TEST_CASE("criterion 9: set-type round trip on geometric certificates") {
  Term geo = corpus("geo_half.spcf");
  bool pass = true;
  for (std::size_t k : {5, 10, 20}) {
    LowerBoundConfig cfg;
    cfg.max_depth = 5 * k - 1;  // admits exactly k terminating paths
    cfg.emit_boxes = true;
    LowerBoundResult r = lower_bound(geo, cfg);
    std::vector<IntervalTrace> boxes;
    for (const auto& e : r.certificate) boxes.push_back(e.trace);
    boxes = strong_split(boxes);
    Derivation d = synthesize(geo, boxes);
    CheckReport rep = check_derivation(d);
    Rat want = Rat((1l << k) - 1, 1l << k);
    bool ok = rep.ok && omega(d->conclusion) == want && r.certificate.size() == k;
    if (!ok) pass = false;
    CHECK_MESSAGE(ok, "k = ", k, " ", rep.error);
  }
  CHECK(pass);
  report(9, pass, "derivations check with omega = 1 - 2^-k for k in {5, 10, 20}");
}

TEST_CASE("criterion 10: empirical counting patterns dominate the worst case") {
  Term fix = find_fixpoint(corpus("sigmix_06.spcf"));
  BuiltTree built = build_tree(fix);
  PApprox p = p_approx(built);
  const std::size_t N = 10000;
  bool pass = true;
  int which = 0;
  for (const Rat& r : {Rat(-2), Rat(0), Rat(1), Rat(5)}) {
    auto emp = empirical_counting_pattern(fix, r, N, 555 + which++);
    double cum_emp = 0;
    Rat cum_p(0);
    for (std::size_t n = 0; n <= p.rank; ++n) {
      auto it = emp.find(n);
      if (it != emp.end()) cum_emp += it->second;
      auto ip = p.mass.find(n);
      if (ip != p.mass.end()) cum_p += ip->second;
      double pd = rat_to_double(cum_p);
      double sigma = std::sqrt(std::max(pd * (1 - pd), 1e-9) / static_cast<double>(N));
      if (cum_emp < pd - 3 * sigma) pass = false;
      CHECK_MESSAGE(cum_emp >= pd - 3 * sigma, "argument ", rat_to_string(r), " at n = ", n);
    }
  }
  CHECK(pass);
  report(10, pass, "cumulative dominance at every count for arguments {-2, 0, 1, 5}");
}
