#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lipstab/scenario.hpp"

using namespace lipstab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "lipstab-cli-test" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

RunResult run(const std::string& text, const fs::path& out, std::string* log_text = nullptr) {
  std::ostringstream log;
  RunOptions o;
  o.out_dir = out.string();
  auto r = run_scenario_text(text, "test.json", o, log);
  if (log_text) *log_text = log.str();
  return r;
}

const char* kForward = R"({
  "version": 1,
  "experiment": "forward",
  "geometry": {"kind": "strips", "strips": 2},
  "h": 0.03125,
  "lambda": 10,
  "admittivity": [1, [1, 1]],
  "params": {"trace": "x1"}
})";

const char* kIdentity = R"({
  "version": 1,
  "experiment": "identity-check",
  "seed": 12,
  "geometry": {"kind": "strips", "strips": 3},
  "h": 0.0625,
  "admittivity": [[1.5, 0.3], [2, -0.4], [0.8, 0.2]],
  "admittivity2": [[1.2, 0.1], [2.5, 0.4], 1],
  "params": {"trials": 4, "trace1": "random", "trace2": "random"}
})";

}  // namespace

TEST_CASE("forward smoke run") {
  const auto dir = scratch("forward");
  const auto r = run(kForward, dir);
  REQUIRE(r.exit_code == kExitOk);
  CHECK(fs::exists(dir / "solution.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["version"] == version_string());
  CHECK(manifest["mesh_hash"].is_string());
  CHECK(manifest["config"]["experiment"] == "forward");
  CHECK(manifest["wall_time_s"].is_number());
  const std::string csv = slurp(dir / "solution.csv");
  CHECK(csv.rfind("node_index,x,y,re_u,im_u\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("identity run is accurate and reproducible") {
  const auto a = scratch("identity-a"), b = scratch("identity-b");
  REQUIRE(run(kIdentity, a).exit_code == kExitOk);
  REQUIRE(run(kIdentity, b).exit_code == kExitOk);
  const std::string csv = slurp(a / "identity.csv");
  CHECK(csv == slurp(b / "identity.csv"));
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "lhs_re,lhs_im,rhs_re,rhs_im,rel_err");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(std::stod(line.substr(line.rfind(',') + 1)) <= 1e-10);
  }
  CHECK(rows == 4);
}

TEST_CASE("seed override changes random traces") {
  const auto a = scratch("seed-a"), b = scratch("seed-b");
  std::ostringstream log;
  RunOptions o;
  o.out_dir = a.string();
  REQUIRE(run_scenario_text(kIdentity, "x", o, log).exit_code == kExitOk);
  o.out_dir = b.string();
  o.seed = 99;
  REQUIRE(run_scenario_text(kIdentity, "x", o, log).exit_code == kExitOk);
  CHECK(slurp(a / "identity.csv") != slurp(b / "identity.csv"));
}

TEST_CASE("validation errors name the field") {
  std::string text = kForward;
  text.replace(text.find("[1, 1]"), 6, "[0, 1]");
  std::string log;
  const auto r = run(text, scratch("bad-gamma"), &log);
  CHECK(r.exit_code == kExitInvalid);
  CHECK(r.message.find("admittivity[1]") != std::string::npos);
  CHECK(r.message.find("ellipticity") != std::string::npos);
  CHECK(log.find("error:") != std::string::npos);
}

TEST_CASE("unknown keys and malformed text") {
  std::string extra = kForward;
  extra.insert(1, "\"colour\": 3,");
  auto r = run(extra, scratch("bad-key"));
  CHECK(r.exit_code == kExitInvalid);
  CHECK(r.message.find("colour") != std::string::npos);

  std::string params = kForward;
  params.replace(params.find("\"trace\""), 7, "\"tarce\"");
  r = run(params, scratch("bad-param"));
  CHECK(r.exit_code == kExitInvalid);
  CHECK(r.message.find("params.tarce") != std::string::npos);

  r = run("{\n  \"version\": 1,\n  \"experiment\": ,\n}", scratch("bad-json"));
  CHECK(r.exit_code == kExitInvalid);
  CHECK(r.message.find("test.json:3:") != std::string::npos);

  r = run(R"({"version": 2, "experiment": "forward"})", scratch("bad-version"));
  CHECK(r.exit_code == kExitInvalid);

  std::ostringstream log;
  CHECK(run_scenario("/nonexistent/config.json", {}, log).exit_code == kExitInvalid);
}

TEST_CASE("catalog") {
  CHECK(experiment_catalog().size() == 10);
  const std::string text = catalog_text();
  for (const auto& e : experiment_catalog()) {
    CHECK(text.find(e.name + "\n") != std::string::npos);
    CHECK(!e.anchor.empty());
  }
  const auto j = nlohmann::json::parse(catalog_json());
  REQUIRE(j.size() == 10);
  for (std::size_t i = 0; i < j.size(); ++i) {
    CHECK(j[i]["name"] == experiment_catalog()[i].name);
    CHECK(j[i]["anchor"] == experiment_catalog()[i].anchor);
  }
}

TEST_CASE("every experiment runs from a config") {
  const std::vector<std::string> configs = {
      R"({"version":1,"experiment":"dtn-norm","geometry":{"kind":"disk"},"h":0.125,"admittivity":[2],"admittivity2":[1]})",
      R"({"version":1,"experiment":"asymptotics","geometry":{"kind":"strips","strips":2},"h":0.0625,"admittivity":[1,[2,1]],"params":{"r0_exponents":[2,3]}})",
      R"({"version":1,"experiment":"asymptotics","geometry":{"kind":"strips","strips":2},"admittivity":[1,[2,1]],"params":{"free_space":true}})",
      R"({"version":1,"experiment":"s-rate","params":{"exponents":[3,4,5]}})",
      R"({"version":1,"experiment":"reconstruct","geometry":{"kind":"strips","strips":2},"h":0.125,"admittivity":[[1.5,0.2],2],"params":{"noise":[0,1e-3]}})",
      R"({"version":1,"experiment":"constant-bound","params":{"N_max":3}})",
      R"({"version":1,"experiment":"sweep","geometry":{"kind":"strips","strips":2},"h":0.125,"admittivity":[1,1],"params":{"depth_magnitude":0.5}})",
      R"({"version":1,"experiment":"three-sphere","params":{"count":20}})",
      R"({"version":1,"experiment":"caccioppoli","geometry":{"kind":"strips","strips":1},"h":0.0625,"admittivity":[1],"params":{"center":[0.5,0.5],"rho":0.1,"R":0.3,"count":3}})",
  };
  int i = 0;
  for (const auto& c : configs) {
    const auto r = run(c, scratch("all-" + std::to_string(i++)));
    INFO(c);
    INFO(r.message);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.outputs.size() >= 2);
  }
}
