#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "plap/error.hpp"
#include "plap/experiment.hpp"
#include "plap/schema.hpp"

using namespace plap;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "plap-cli-tests" / name;
  fs::remove_all(dir);
  return dir;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  for (std::string cell; std::getline(s, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int run_quiet(Command c, const json& doc, const fs::path& out, std::ostringstream* log = nullptr) {
  std::ostringstream sink;
  return run_document(c, doc, RunOverrides{out.string(), std::nullopt}, log ? *log : sink);
}

json disk_verify() {
  return json::parse(R"({"schema_version": 1, "command": "verify",
    "domain": {"kind": "disk", "R": 1.0}, "metric": {"kind": "flat"},
    "p": [2, 3], "h": [0.05], "seed": 1})");
}

void check_report(const json& report) {
  const SchemaValidator v(report_schema());
  const auto errors = v.errors(report);
  for (const auto& e : errors) MESSAGE(e);
  CHECK(errors.empty());
}

}  // namespace

TEST_CASE("schema validator reports pointers") {
  const SchemaValidator v(config_schema());
  json doc = disk_verify();
  CHECK(v.valid(doc));
  doc["solver"] = {{"rho", 1.5}};
  doc["colour"] = "blue";
  const auto errors = v.errors(doc);
  REQUIRE(errors.size() == 2);
  bool rho = false, unknown = false;
  for (const auto& e : errors) {
    rho |= e.rfind("/solver/rho", 0) == 0;
    unknown |= e.find("colour") != std::string::npos;
  }
  CHECK(rho);
  CHECK(unknown);
}

TEST_CASE("schema subset keywords") {
  const SchemaValidator v(json::parse(R"({
    "type": "object", "required": ["a"], "additionalProperties": false,
    "properties": {
      "a": {"oneOf": [{"type": "integer", "minimum": 1}, {"type": "string", "minLength": 2}]},
      "b": {"type": "array", "items": {"enum": [1, 2]}, "minItems": 1, "maxItems": 2},
      "c": {"$ref": "#/$defs/pos"}
    },
    "$defs": {"pos": {"type": "number", "exclusiveMinimum": 0, "maximum": 10}}})"));
  CHECK(v.valid(json::parse(R"({"a": 3, "b": [1], "c": 10})")));
  CHECK(v.valid(json::parse(R"({"a": "xy"})")));
  CHECK_FALSE(v.valid(json::parse(R"({"a": 0})")));
  CHECK_FALSE(v.valid(json::parse(R"({"a": "x"})")));
  CHECK_FALSE(v.valid(json::parse(R"({"b": [1]})")));
  CHECK_FALSE(v.valid(json::parse(R"({"a": 1, "b": []})")));
  CHECK_FALSE(v.valid(json::parse(R"({"a": 1, "b": [1, 2, 1]})")));
  CHECK_FALSE(v.valid(json::parse(R"({"a": 1, "b": [3]})")));
  CHECK_FALSE(v.valid(json::parse(R"({"a": 1, "c": 0})")));
  CHECK_FALSE(v.valid(json::parse(R"({"a": 1, "c": 11})")));
  CHECK_FALSE(v.valid(json::parse(R"({"a": 1.5})")));
}

TEST_CASE("config parsing") {
  json doc = disk_verify();
  doc["solver"] = {{"rho", 0.2}, {"max_newton_iter", 30}};
  doc["metric"] = {{"kind", "constant"}, {"params", {0.1}}};
  const ExperimentConfig c = parse_config(doc);
  CHECK(c.command == Command::kVerify);
  CHECK(c.p == std::vector<double>{2.0, 3.0});
  CHECK(c.solver.rho == 0.2);
  CHECK(c.solver.max_newton_iter == 30);
  CHECK(c.metric.kind() == ConformalMetric::Kind::kConstant);
  CHECK(c.seed == 1);
  CHECK(c.matcheck.seed == 1);

  doc["domain"] = {{"kind", "ellipse"}, {"a", 1.0}, {"b", 2.0}};
  CHECK_THROWS_AS(parse_config(doc), ValidationError);
  doc = disk_verify();
  doc["metric"] = {{"kind", "constant"}, {"params", {0.1, 0.2}}};
  CHECK_THROWS_AS(parse_config(doc), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/plap.json"), ValidationError);
}

TEST_CASE("rho outside (0, 1) is a config error") {
  const fs::path out = scratch("bad_rho");
  json doc = disk_verify();
  doc["solver"] = {{"rho", 1.5}};
  CHECK(run_quiet(Command::kVerify, doc, out) == kExitConfigError);
  const json err = read_json(out / "error.json");
  CHECK(err["exit_code"] == 2);
  CHECK(err["error"]["kind"] == "config");
  CHECK(err["error"]["message"].get<std::string>().find("/solver/rho") != std::string::npos);
  check_report(err);
  CHECK_FALSE(fs::exists(out / "report.json"));
}

TEST_CASE("other config errors") {
  const fs::path out = scratch("config_errors");
  CHECK(run_quiet(Command::kSweep, disk_verify(), out) == kExitConfigError);
  json doc = disk_verify();
  doc["unknown"] = 1;
  CHECK(run_quiet(Command::kVerify, doc, out) == kExitConfigError);
  std::ostringstream log;
  CHECK(run(Command::kVerify, "/nonexistent/plap.json", RunOverrides{out.string(), std::nullopt}, log) ==
        kExitConfigError);
  check_report(read_json(out / "error.json"));
  const fs::path garbage = out / "garbage.json";
  fs::create_directories(out);
  std::ofstream(garbage) << "{ not json";
  CHECK(run(Command::kVerify, garbage, RunOverrides{out.string(), std::nullopt}, log) == kExitConfigError);
}

TEST_CASE("verify on the disk passes and emits plot data") {
  const fs::path out = scratch("disk_verify");
  std::ostringstream log;
  CHECK(run_quiet(Command::kVerify, disk_verify(), out, &log) == kExitOk);
  const json report = read_json(out / "report.json");
  check_report(report);
  CHECK(report["pass"] == true);
  REQUIRE(report["runs"].size() == 2);
  for (const auto& run : report["runs"]) {
    const double perimeter = run["measures"]["perimeter"];
    CHECK(run["serrin"]["deficit"].get<double>() <= 1e-3 * perimeter);
    CHECK(run["flags"]["B"] == true);
    CHECK(run["flags"]["D"] == true);
    CHECK(run["flags"]["E"] == true);
    CHECK(fs::exists(out / run["trace"]["csv"].get<std::string>()));
  }

  const auto lines = read_lines(out / "plots" / "boundary_p2_h0.05.csv");
  REQUIRE(lines.size() > 10);
  CHECK(lines[0] == "s,x,y,H,u_nu,overdetermined_residual,flagged");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    CHECK(std::stod(cells[3]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(std::stod(cells[4]) + 0.5) <= 0.01);
  }
  CHECK(fs::exists(out / "plots" / "slice_p3_h0.05.csv"));
  CHECK(read_lines(out / "plots" / "convergence.csv").size() == 3);
}

TEST_CASE("ellipse boundary profile spans the curvature range") {
  const fs::path out = scratch("ellipse_verify");
  json doc = disk_verify();
  doc["domain"] = {{"kind", "ellipse"}, {"a", 2.0}, {"b", 1.0}};
  doc["p"] = {2};
  run_quiet(Command::kVerify, doc, out);
  const auto lines = read_lines(out / "plots" / "boundary_p2_h0.05.csv");
  REQUIRE(lines.size() > 10);
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const double H = std::stod(split(lines[i])[3]);
    lo = std::min(lo, H);
    hi = std::max(hi, H);
  }
  CHECK(lo == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(lo >= 0.25);
  CHECK(hi == doctest::Approx(2.0).epsilon(1e-6));
  const json report = read_json(out / "report.json");
  check_report(report);
  CHECK(report["runs"][0]["flags"]["D"] == false);
}

TEST_CASE("empty plot set writes nothing") {
  const fs::path out = scratch("empty_plots");
  std::ostringstream log;
  emit_plot_data({}, out, log);
  CHECK(log.str().find("warning") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("unwritable output directory is exit 2") {
  const fs::path base = scratch("unwritable");
  fs::create_directories(base);
  std::ofstream(base / "file") << "x";
  CHECK(run_quiet(Command::kRadial, json{{"schema_version", 1}}, base / "file" / "out") == kExitConfigError);
}

TEST_CASE("sweep writes one row per grid point") {
  const fs::path out = scratch("sweep");
  json doc = json::parse(R"({"schema_version": 1, "command": "sweep",
    "domain": {"kind": "ellipse", "a": 2.0, "b": 1.0}, "metric": {"kind": "flat"},
    "p": [1.5, 2, 3, 4], "h": [0.1, 0.05], "threads": 0, "seed": 3})");
  const int code = run_quiet(Command::kSweep, doc, out);
  CHECK((code == kExitOk || code == kExitCheckFailed));
  const auto lines = read_lines(out / "sweep.csv");
  REQUIRE(lines.size() == 9);
  const auto header = split(lines[0]);
  CHECK(header[0] == "p");
  CHECK(header[1] == "h");
  for (const char* col : {"fundamental_lhs_volume", "fundamental_lhs_boundary", "fundamental_rhs", "hk_t1",
                          "hk_t2", "hk_t3", "sbt_lhs1", "sbt_lhs2", "sbt_rhs", "serrin_deficit"})
    CHECK(std::find(header.begin(), header.end(), col) != header.end());
  for (std::size_t i = 1; i < lines.size(); ++i) CHECK(split(lines[i]).size() == header.size());
  const json report = read_json(out / "report.json");
  check_report(report);
  CHECK(report["runs"].size() == 8);
  CHECK(report["exit_code"] == code);

  // Same config and seed: identical report apart from the timestamp, identical CSV.
  const fs::path again = scratch("sweep_again");
  CHECK(run_quiet(Command::kSweep, doc, again) == code);
  json a = report, b = read_json(again / "report.json");
  a.erase("timestamp");
  b.erase("timestamp");
  CHECK(a.dump() == b.dump());
  CHECK(read_lines(again / "sweep.csv") == lines);
}

TEST_CASE("solve writes mesh and nodal solution") {
  const fs::path out = scratch("solve");
  json doc = json::parse(R"({"schema_version": 1, "command": "solve",
    "domain": {"kind": "disk", "R": 1.0}, "p": [2], "h": [0.1]})");
  CHECK(run_quiet(Command::kSolve, doc, out) == kExitOk);
  CHECK(fs::exists(out / "mesh_p2_h0.1.txt"));
  const auto lines = read_lines(out / "solution_p2_h0.1.csv");
  CHECK(lines.size() > 100);
  const json report = read_json(out / "report.json");
  check_report(report);
  CHECK(report["runs"][0]["solver"]["radial_error"].get<double>() <= 5e-3);
}

TEST_CASE("solver failure is exit 3 with the residual history") {
  const fs::path out = scratch("solver_failure");
  json doc = json::parse(R"({"schema_version": 1, "domain": {"kind": "ellipse", "a": 2.0, "b": 1.0},
    "p": [4], "h": [0.1], "solver": {"max_newton_iter": 1}})");
  CHECK(run_quiet(Command::kSolve, doc, out) == kExitSolverFailure);
  const json err = read_json(out / "error.json");
  check_report(err);
  CHECK(err["error"]["kind"] == "solver");
  CHECK(!err["error"]["residual_history"].empty());
}

TEST_CASE("matcheck and radial commands") {
  const fs::path out = scratch("matcheck");
  json doc = json::parse(R"({"schema_version": 1, "matcheck": {"samples": 20000}, "seed": 11})");
  CHECK(run_quiet(Command::kMatcheck, doc, out) == kExitOk);
  json report = read_json(out / "report.json");
  check_report(report);
  CHECK(report["matcheck"]["min_gap"].get<double>() >= -1e-12);
  CHECK(report["matcheck"]["hand_witnesses"].size() == 3);
  CHECK(fs::exists(out / "witnesses.csv"));

  const fs::path rout = scratch("radial");
  CHECK(run_quiet(Command::kRadial, json{{"schema_version", 1}}, rout) == kExitOk);
  report = read_json(rout / "report.json");
  check_report(report);
  CHECK(report["radial"].size() == 8);
  CHECK(read_lines(rout / "radial.csv").size() == 9);
}

TEST_CASE("shipped configs validate") {
  const char* root = std::getenv("PLAP_SOURCE_DIR");
  if (!root) return;
  const SchemaValidator v(config_schema());
  int count = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(root) / "configs")) {
    const json doc = read_json(entry.path());
    const bool bad = entry.path().filename().string().rfind("bad_", 0) == 0;
    INFO(entry.path().string());
    CHECK(v.valid(doc) != bad);
    ++count;
  }
  CHECK(count >= 5);
}
