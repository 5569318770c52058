#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <regex>
#include <string>

#include "macrostate/scenario.hpp"
#include "macrostate/series.hpp"

using namespace macrostate;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "macrostate_unit" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const json& cfg) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << cfg.dump(2);
  return p.string();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

json minimal() {
  return json::parse(R"({
    "model": {"model_kind": "xxz_chain", "num_sites": 2},
    "initial_condition": {"kind": "gibbs", "zeta": [0.3, -0.2, 0.5]},
    "t_end": 1.0
  })");
}

json quench(double strength) {
  json cfg = json::parse(R"({
    "model": {"model_kind": "xxz_chain", "num_sites": 4, "couplings": {"jz": 0.8, "field": 0.3}},
    "initial_condition": {"kind": "quench", "zeta": [0, 0, 0, 0, 0.5],
                          "pre_couplings": {"jz": 1.3, "site_fields": [0.3, -0.1, 0.2, 0.0]}},
    "pipelines": ["exact", "memory", "semigroup"],
    "mem": {"tau": 0.5, "dt": 0.02},
    "dt": 0.02, "t_end": 1.0,
    "tau_diagnostic": {"t_max": 5.0}
  })");
  cfg["initial_condition"]["strength"] = strength;
  return cfg;
}

struct Captured {
  int code;
  std::string out, err;
};

Captured run(const std::string& config, const fs::path& out_dir, std::vector<std::string> overrides = {}) {
  RunOptions o;
  o.output_dir = out_dir.string();
  o.overrides = std::move(overrides);
  std::ostringstream out, err;
  const int code = run_command(config, o, out, err);
  return {code, out.str(), err.str()};
}

std::string error_of(const json& cfg) {
  try {
    parse_config(cfg);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int cli(const std::string& args) {
  const int status = std::system((std::string(MACROSTATE_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal exact run keeps conserved expectations constant") {
  const fs::path dir = scratch("minimal");
  const Captured r = run(write_config(dir, minimal()), dir / "out");
  REQUIRE(r.code == kExitOk);
  const SeriesTable t = read_series((dir / "out" / "exact.tsv").string());
  REQUIRE(t.columns.front() == "time");
  CHECK(t.columns.back() == "entropy");
  const auto col = std::find(t.columns.begin(), t.columns.end(), "exp:H") - t.columns.begin();
  REQUIRE(col < static_cast<long>(t.columns.size()));
  CHECK(t.rows.size() == 101);
  for (const auto& row : t.rows) CHECK(std::abs(row[col] - t.rows[0][col]) < 1e-8);

  const json manifest = read_json(dir / "out" / "manifest.json");
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["exit_code"] == 0);
  // Every applied default is present in the resolved config.
  for (const auto& path : manifest["defaults_applied"]) {
    json::json_pointer ptr("/" + std::regex_replace(path.get<std::string>(), std::regex("\\."), "/"));
    CHECK_MESSAGE(manifest["config"].contains(ptr), path);
  }
  CHECK(error_of(manifest["config"]).empty());
}

TEST_CASE("config errors name the offending field") {
  json cfg = minimal();
  cfg["pipelines"] = {"exact", "memory"};
  CHECK(error_of(cfg).find("mem") != std::string::npos);

  cfg = minimal();
  cfg["model"]["num_stes"] = 3;
  CHECK(error_of(cfg).find("model.num_stes") != std::string::npos);

  cfg = minimal();
  cfg.erase("t_end");
  CHECK(error_of(cfg).find("t_end") != std::string::npos);

  cfg = minimal();
  cfg["pipelines"] = {"exact", "exact"};
  CHECK(error_of(cfg).find("listed twice") != std::string::npos);

  cfg = minimal();
  cfg["semigroup"] = {{"tau", "estimated"}};
  CHECK(error_of(cfg).empty());
  cfg["semigroup"] = {{"tau", "soon"}};
  CHECK(error_of(cfg).find("semigroup.tau") != std::string::npos);
}

TEST_CASE("zeta length is checked against the relevant set") {
  const fs::path dir = scratch("zeta_len");
  json cfg = minimal();
  cfg["initial_condition"]["zeta"] = {1.0};
  const Captured r = run(write_config(dir, cfg), dir / "out");
  CHECK(r.code == kExitConfigError);
  CHECK(r.err.find("initial_condition.zeta") != std::string::npos);
}

TEST_CASE("malformed json reports the position") {
  const fs::path dir = scratch("malformed");
  const fs::path p = dir / "config.json";
  std::ofstream(p) << "{\n  \"model\": {\n    \"num_sites\": 2,\n  }\n}\n";
  try {
    load_config(p.string());
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("overrides") {
  json cfg = minimal();
  apply_override(cfg, "model.num_sites=3");
  apply_override(cfg, "initial_condition.zeta.1=0.25");
  apply_override(cfg, "output.dir=elsewhere");
  CHECK(cfg["model"]["num_sites"] == 3);
  CHECK(cfg["initial_condition"]["zeta"][1] == 0.25);
  CHECK(cfg["output"]["dir"] == "elsewhere");
  CHECK_THROWS_AS(apply_override(cfg, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "initial_condition.zeta.9=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "t_end.x=1"), ConfigError);
}

TEST_CASE("quench run writes all pipelines and a deviation table") {
  const fs::path dir = scratch("quench");
  auto exact_vs_memory = [&](double strength, const std::string& tag) {
    const Captured r = run(write_config(dir, quench(strength)), dir / tag);
    REQUIRE(r.code == kExitOk);
    for (const char* f : {"exact.tsv", "memory.tsv", "semigroup.tsv", "report.json", "manifest.json"}) {
      CHECK(fs::exists(dir / tag / f));
    }
    const json report = read_json(dir / tag / "report.json");
    CHECK(report["deviations"].size() == 3);
    CHECK(report["tau_diagnostic"]["tau_est"].is_number());
    CHECK(report["entropy"]["exact"]["first_step"].get<double>() > -1e-8);
    for (const auto& d : report["deviations"]) {
      if (d["a"] == "exact" && d["b"] == "memory") return d["max_abs"].get<double>();
    }
    FAIL("no exact/memory entry");
    return 0.0;
  };
  const double full = exact_vs_memory(0.5, "full");
  const double half = exact_vs_memory(0.25, "half");
  CHECK(half < full);
  CHECK(full / half > 2.5);
}

TEST_CASE("numerical failure is recorded in the manifest") {
  const fs::path dir = scratch("failure");
  json cfg = quench(0.5);
  cfg["mem"]["step_bound"] = 1e-9;
  const Captured r = run(write_config(dir, cfg), dir / "out");
  CHECK(r.code == kExitNumericalFailure);
  const json manifest = read_json(dir / "out" / "manifest.json");
  CHECK(manifest["status"] == "numerical_failure");
  CHECK(manifest["failure"]["pipeline"] == "memory");
  CHECK(manifest["failure"]["time"].is_number());
  CHECK(fs::exists(dir / "out" / "exact.tsv"));
}

TEST_CASE("diagnose-tau") {
  const fs::path dir = scratch("tau");
  json single = minimal();
  single["model"]["num_sites"] = 1;
  single["initial_condition"]["zeta"] = {0.3};
  RunOptions o;
  o.output_dir = (dir / "single").string();
  std::ostringstream out, err;
  REQUIRE(diagnose_tau_command(write_config(dir, single), o, out, err) == kExitOk);
  CHECK(out.str().find("no driven modes") != std::string::npos);
  CHECK(read_json(dir / "single" / "tau_report.json")["no_driven"] == true);

  json six = quench(0.5);
  six["model"]["num_sites"] = 6;
  six["initial_condition"] = {{"kind", "gibbs"}, {"zeta", "random"}};
  six["observables"] = {{"mode_cutoff", 2}};
  six["pipelines"] = {"exact"};
  o.output_dir = (dir / "six").string();
  REQUIRE(diagnose_tau_command(write_config(dir, six), o, out, err) == kExitOk);
  const json rep = read_json(dir / "six" / "tau_report.json");
  REQUIRE(rep["probes"].size() == 1);
  CHECK(rep["probes"][0]["label"] == "Sz:c1");
  REQUIRE(rep["tau_est"].is_number());
  if (rep["recurrence"].is_number()) CHECK(rep["tau_est"].get<double>() < rep["recurrence"].get<double>());
}

TEST_CASE("series round trip and compare") {
  const SeriesTable t = parse_series("time\tx\n0\t0.10000000000000001\n0.5\t-3e-300\n");
  CHECK(t.rows[1][1] == -3e-300);
  CHECK_THROWS_AS(parse_series("time\tx\n0\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_series("time\tx\n0\tabc\n"), InvalidArgument);

  const fs::path dir = scratch("compare");
  std::ofstream(dir / "a.tsv") << "time\tx\n0\t1\n1\t2\n";
  std::ofstream(dir / "b.tsv") << "time\tx\n0\t1.5\n1\t2\n";
  RunOptions o;
  std::ostringstream out, err;
  REQUIRE(compare_command((dir / "a.tsv").string(), (dir / "b.tsv").string(), o, out, err) == kExitOk);
  CHECK(out.str().find("x\t0.5\t0.25") != std::string::npos);
  CHECK(out.str().find("overall_max_abs\t0.5") != std::string::npos);
  CHECK(compare_command((dir / "a.tsv").string(), (dir / "missing.tsv").string(), o, out, err) == kExitConfigError);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  const std::string cfg = write_config(dir, minimal());
  CHECK(cli("run " + cfg + " --quiet --output-dir " + (dir / "ok").string()) == 0);
  CHECK(cli("run " + cfg + " --quiet --output-dir " + (dir / "ok2").string() + " --override t_end=0.5") == 0);
  CHECK(read_series((dir / "ok2" / "exact.tsv").string()).rows.size() == 51);
  CHECK(cli("run " + cfg + " --override t_end=-1") == 2);
  CHECK(cli("run " + (dir / "absent.json").string()) == 2);
  CHECK(cli("") == 2);
  CHECK(cli("frobnicate") == 2);

  // Output path below a regular file cannot be created.
  std::ofstream(dir / "blocker") << "x";
  CHECK(cli("run " + cfg + " --output-dir " + (dir / "blocker" / "sub").string()) == 2);
  CHECK(cli("compare " + (dir / "ok" / "exact.tsv").string() + " " + (dir / "ok2" / "exact.tsv").string()) == 2);
  CHECK(cli("compare " + (dir / "ok" / "exact.tsv").string() + " " + (dir / "ok" / "exact.tsv").string()) == 0);
}
