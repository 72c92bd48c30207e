#include <doctest.h>

#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  CliResult r;
  std::string cmd = std::string(SPCF_BIN) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string corpus_arg(const std::string& name) {
  return "\"" + std::string(SPCF_CORPUS_DIR) + "/" + name + "\"";
}

bool is_rational_obj(const nlohmann::json& j) {
  return j.is_object() && j.contains("rational") && j.contains("decimal") &&
         j["rational"].is_string() && j["decimal"].is_string();
}

}  // namespace

TEST_CASE("lb json output has the schema shape and the exact figure") {
  CliResult r = run_cli("lb " + corpus_arg("geo_half.spcf") + " --depth 100 --format json");
  REQUIRE(r.code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(is_rational_obj(j["lb_probability"]));
  CHECK(is_rational_obj(j["lb_expected_steps"]));
  CHECK(j["oracles_terminated"].is_number_unsigned());
  CHECK(j["oracles_explored"].is_number_unsigned());
  CHECK(j["depth"] == 100);
  CHECK(j["elapsed_ms"].is_number_unsigned());
  CHECK(j["lb_probability"]["rational"] == "1048575/1048576");
  CHECK(j["lb_probability"]["decimal"] == "0.9999990463");
}

TEST_CASE("ast json output has the schema shape") {
  CliResult r = run_cli("ast " + corpus_arg("sigmix_06.spcf") + " --format json");
  REQUIRE(r.code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["decision"] == "AST");
  CHECK(j["rank"] == 3);
  CHECK(j["independence"] == true);
  REQUIRE(j["p_approx"].is_object());
  CHECK(j["p_approx"]["0"]["rational"] == "3/5");
  CHECK(j["p_approx"]["2"]["rational"] == "1/5");
  CHECK(j["p_approx"]["3"]["rational"] == "1/5");
  CHECK(is_rational_obj(j["checks"]["sum"]));
  CHECK(is_rational_obj(j["checks"]["drift"]));
  CHECK(j["checks"]["not_delta_one"] == true);
}

TEST_CASE("repeated runs are byte-identical up to timing") {
  // elapsed_ms can differ; strip it before comparing
  auto stable = [](const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    j.erase("elapsed_ms");
    return j.dump();
  };
  CliResult a = run_cli("lb " + corpus_arg("gr.spcf") + " --depth 40 --seed 7 --format json");
  CliResult b = run_cli("lb " + corpus_arg("gr.spcf") + " --depth 40 --seed 7 --format json");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(stable(a.out) == stable(b.out));
}

TEST_CASE("exit codes: 1 for Unknown, 2 for input errors") {
  CHECK(run_cli("ast " + corpus_arg("prog2_49.spcf")).code == 1);
  CHECK(run_cli("lb \"/nonexistent/missing.spcf\"").code == 2);
  CHECK(run_cli("ast " + corpus_arg("geo_half.spcf")).code == 0);
  // gap outside (0,1) is an input error
  CHECK(run_cli("lb " + corpus_arg("geo_half.spcf") + " --gap 2").code == 2);
}
