#include "spcf/verifier.hpp"

#include <chrono>
#include <functional>

#include "spcf/typecheck.hpp"

namespace spcf {

Term find_fixpoint(const Term& program) {
  std::vector<Term> found;
  std::function<void(const Term&)> rec = [&](const Term& t) {
    if (t->tag == Tag::Fix) found.push_back(t);
    for (const auto& k : t->kids) rec(k);
  };
  rec(program);
  if (found.empty()) throw TreeError("program contains no fixpoint");
  if (found.size() > 1) throw TreeError("program contains more than one fixpoint");
  return found.front();
}

AstVerdict verify_ast(const Term& program) {
  auto t0 = std::chrono::steady_clock::now();
  AstVerdict v;
  auto finish = [&]() -> AstVerdict& {
    v.elapsed_ms = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                  std::chrono::steady_clock::now() - t0)
                                                  .count());
    return v;
  };

  Term fixpoint;
  BuiltTree built;
  try {
    typecheck(program);
    fixpoint = find_fixpoint(program);
    built = build_tree(fixpoint);  // first-order, nested-free, progress-checked
  } catch (const std::exception& e) {
    v.structural_failure = true;
    v.reason = e.what();
    return finish();
  }

  v.independence = sufficient_independence(built.tree);
  if (!v.independence) {
    v.reason = "a sample variable in a red guard is reused below it";
    return finish();
  }

  try {
    v.approx = p_approx(built);
  } catch (const TreeError& e) {
    v.reason = e.what();
    return finish();
  }
  v.rank = v.approx.rank;

  CountingDist counting;
  for (const auto& [n, w] : v.approx.mass) counting.mass[n] = w;
  v.checks = is_ast(shift(counting));
  if (!v.checks.ast) {
    v.reason = v.checks.reason;
    return finish();
  }
  v.decision = AstVerdict::Decision::Ast;
  return finish();
}

}  // namespace spcf
