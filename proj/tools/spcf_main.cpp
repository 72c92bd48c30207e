#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spcf/exectree.hpp"
#include "spcf/lowerbound.hpp"
#include "spcf/parser.hpp"
#include "spcf/typecheck.hpp"
#include "spcf/verifier.hpp"

namespace {

using namespace spcf;

std::string rat_pretty(const Rat& q) { return rat_to_string(q) + " (" + rat_to_decimal(q) + ")"; }

nlohmann::json rat_json(const Rat& q) {
  return {{"rational", rat_to_string(q)}, {"decimal", rat_to_decimal(q)}};
}

std::string papprox_pretty(const PApprox& p) {
  if (p.mass.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [n, w] : p.mass) {
    if (!first) out += " + ";
    first = false;
    out += rat_to_string(w) + "·δ" + std::to_string(n);
  }
  return out;
}

int run_lb(const std::string& path, std::size_t depth, const std::string& gap_text,
           std::uint64_t budget_ms, const std::string& format, const std::string& cert_path,
           unsigned jobs) {
  Term t;
  try {
    t = parse_file(path);
    typecheck(t);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  LowerBoundConfig cfg;
  cfg.max_depth = depth;
  if (!gap_text.empty()) {
    auto g = rat_from_string(gap_text);
    if (!g || *g <= 0 || *g >= 1) {
      std::cerr << "error: --gap must be a rational in (0,1)\n";
      return 2;
    }
    cfg.per_path_gap = *g;
  }
  cfg.time_budget_ms = budget_ms;
  cfg.emit_boxes = !cert_path.empty();
  cfg.jobs = jobs;

  LowerBoundResult res = lower_bound(t, cfg);

  if (!cert_path.empty()) {
    std::ofstream out(cert_path);
    if (!out) {
      std::cerr << "error: cannot write " << cert_path << "\n";
      return 2;
    }
    out << certificate_to_json(res.certificate);
  }

  if (format == "json") {
    nlohmann::json j{{"lb_probability", rat_json(res.lb_probability)},
                     {"lb_expected_steps", rat_json(res.lb_expected_steps)},
                     {"oracles_terminated", res.oracles_terminated},
                     {"oracles_explored", res.oracles_explored},
                     {"depth", res.depth},
                     {"elapsed_ms", res.elapsed_ms}};
    if (!cert_path.empty()) j["certificate_boxes"] = res.certificate.size();
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "lb_probability:     " << rat_pretty(res.lb_probability) << "\n";
    std::cout << "lb_expected_steps:  " << rat_pretty(res.lb_expected_steps) << "\n";
    std::cout << "oracles_terminated: " << res.oracles_terminated << "\n";
    std::cout << "oracles_explored:   " << res.oracles_explored << "\n";
    std::cout << "depth:              " << res.depth << "\n";
    std::cout << "elapsed_ms:         " << res.elapsed_ms << "\n";
    if (!cert_path.empty())
      std::cout << "certificate:        " << res.certificate.size() << " boxes -> " << cert_path << "\n";
  }
  return 0;
}

int run_ast(const std::string& path, const std::string& format, const std::string& dot_path) {
  Term t;
  try {
    t = parse_file(path);
    typecheck(t);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (!dot_path.empty()) {
    try {
      BuiltTree built = build_tree(find_fixpoint(t));
      std::ofstream out(dot_path);
      out << tree_to_dot(built.tree);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  AstVerdict v = verify_ast(t);
  if (v.structural_failure) {
    std::cerr << "error: " << v.reason << "\n";
    return 2;
  }
  bool ast = v.decision == AstVerdict::Decision::Ast;
  if (format == "json") {
    nlohmann::json mass = nlohmann::json::object();
    for (const auto& [n, w] : v.approx.mass) mass[std::to_string(n)] = rat_json(w);
    nlohmann::json j{{"decision", ast ? "AST" : "Unknown"},
                     {"p_approx", mass},
                     {"rank", v.rank},
                     {"independence", v.independence},
                     {"checks",
                      {{"sum", rat_json(v.checks.sum)},
                       {"not_delta_one", !v.checks.is_delta_zero},
                       {"drift", rat_json(v.checks.drift)}}},
                     {"elapsed_ms", v.elapsed_ms}};
    if (!ast) j["reason"] = v.reason;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "decision:     " << (ast ? "AST" : "Unknown") << "\n";
    if (!ast) std::cout << "reason:       " << v.reason << "\n";
    std::cout << "p_approx:     " << papprox_pretty(v.approx) << "\n";
    std::cout << "rank:         " << v.rank << "\n";
    std::cout << "independence: " << (v.independence ? "true" : "false") << "\n";
    std::cout << "checks:       sum=" << rat_to_string(v.checks.sum)
              << " not-delta1=" << (v.checks.is_delta_zero ? "false" : "true")
              << " drift=" << rat_to_string(v.checks.drift) << "\n";
    std::cout << "elapsed_ms:   " << v.elapsed_ms << "\n";
  }
  return ast ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spcf: termination analysis for a probabilistic functional language"};
  app.require_subcommand(1);

  std::string file, format = "table", gap_text, cert_path, dot_path;
  std::size_t depth = 100;
  std::uint64_t budget_ms = 0;
  unsigned jobs = 1;
  std::uint64_t seed = 0;

  CLI::App* lb = app.add_subcommand("lb", "certified lower bounds on termination probability");
  lb->add_option("file", file, "term file (.spcf)")->required();
  lb->add_option("--depth", depth, "symbolic step budget (default 100)");
  lb->add_option("--gap", gap_text, "per-path sweep gap, rational in (0,1) (default 1/2^20)");
  lb->add_option("--budget", budget_ms, "time budget in milliseconds");
  lb->add_option("--format", format, "output format: table|json")->check(CLI::IsMember({"table", "json"}));
  lb->add_option("--certificate", cert_path, "emit a box certificate (JSON); bound then equals its weight");
  lb->add_option("--jobs", jobs, "worker threads for per-path measures");
  lb->add_option("--seed", seed, "random seed (analysis is deterministic; accepted for reproducibility)");

  CLI::App* ast = app.add_subcommand("ast", "almost-sure termination verification");
  ast->add_option("file", file, "term file (.spcf)")->required();
  ast->add_option("--format", format, "output format: table|json")->check(CLI::IsMember({"table", "json"}));
  ast->add_option("--dot", dot_path, "dump the execution tree in DOT format");
  ast->add_option("--seed", seed, "random seed (analysis is deterministic; accepted for reproducibility)");

  CLI11_PARSE(app, argc, argv);

  if (depth < 1) {
    std::cerr << "error: --depth must be at least 1\n";
    return 2;
  }
  if (lb->parsed()) return run_lb(file, depth, gap_text, budget_ms, format, cert_path, jobs);
  return run_ast(file, format, dot_path);
}
