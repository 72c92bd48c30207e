#include "spcf/lowerbound.hpp"

#include <chrono>
#include <future>
#include <stdexcept>

#include "spcf/typecheck.hpp"

#include <nlohmann/json.hpp>

namespace spcf {

namespace {

using Clock = std::chrono::steady_clock;

struct PathMeasure {
  Rat lower;
  std::size_t steps = 0;
  std::vector<VarBox> boxes;
  PathMeasure() : lower(0) {}
};

PathMeasure measure_path(const PathResult& path, const LowerBoundConfig& cfg) {
  PathMeasure pm;
  pm.steps = path.steps;
  if (path.constraints.trivially_unsat) return pm;
  SweepOptions opts;
  opts.target_gap = cfg.per_path_gap;
  opts.max_splits = cfg.max_splits_per_path;
  if (cfg.emit_boxes) {
    opts.collect_boxes = true;
    SweepResult r = sweep_measure(path.constraints, opts);
    pm.lower = r.estimate.lower;
    pm.boxes = std::move(r.inside);
    return pm;
  }
  pm.lower = measure(path.constraints, opts).lower;
  return pm;
}

}  // namespace

LowerBoundResult lower_bound(const Term& t, const LowerBoundConfig& cfg) {
  auto t0 = Clock::now();
  typecheck(t);  // rejects open or ill-typed programs
  LowerBoundResult res;
  res.depth = cfg.max_depth;

  OracleFrontier frontier(t, cfg.max_depth);
  std::vector<PathResult> pending;
  auto elapsed = [&] {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count());
  };

  auto flush = [&](std::vector<PathResult>& batch) {
    std::vector<PathMeasure> done(batch.size());
    if (cfg.jobs > 1 && batch.size() > 1) {
      std::vector<std::future<PathMeasure>> futs;
      futs.reserve(batch.size());
      for (const auto& p : batch)
        futs.push_back(std::async(std::launch::async, [&p, &cfg] { return measure_path(p, cfg); }));
      for (std::size_t i = 0; i < futs.size(); ++i) done[i] = futs[i].get();
    } else {
      for (std::size_t i = 0; i < batch.size(); ++i) done[i] = measure_path(batch[i], cfg);
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      res.lb_probability += done[i].lower;
      res.lb_expected_steps += done[i].lower * static_cast<long>(done[i].steps);
      for (auto& box : done[i].boxes) {
        CertificateEntry e;
        e.steps = done[i].steps;
        e.trace.parts = std::move(box);
        res.certificate.push_back(std::move(e));
      }
    }
    batch.clear();
  };

  const std::size_t batch_size = cfg.jobs > 1 ? cfg.jobs * 4 : 1;
  while (auto path = frontier.next()) {
    ++res.oracles_terminated;
    pending.push_back(std::move(*path));
    if (pending.size() >= batch_size) flush(pending);
    if (cfg.time_budget_ms && elapsed() > cfg.time_budget_ms) break;
  }
  flush(pending);
  res.oracles_explored = frontier.configs_explored();
  res.elapsed_ms = elapsed();
  return res;
}

std::string certificate_to_json(const std::vector<CertificateEntry>& cert) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : cert) {
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& iv : e.trace.parts)
      tr.push_back({rat_to_string(iv.lo), rat_to_string(iv.hi)});
    arr.push_back({{"trace", tr}, {"steps", e.steps}});
  }
  return arr.dump(2);
}

std::vector<CertificateEntry> certificate_from_json(const std::string& text) {
  nlohmann::json arr = nlohmann::json::parse(text);
  std::vector<CertificateEntry> out;
  for (const auto& item : arr) {
    CertificateEntry e;
    e.steps = item.at("steps").get<std::size_t>();
    for (const auto& pair : item.at("trace")) {
      auto lo = rat_from_string(pair.at(0).get<std::string>());
      auto hi = rat_from_string(pair.at(1).get<std::string>());
      if (!lo || !hi) throw std::runtime_error("malformed rational in certificate");
      e.trace.parts.emplace_back(*lo, *hi);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace spcf
