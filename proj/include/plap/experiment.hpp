#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plap/fields.hpp"
#include "plap/geometry.hpp"
#include "plap/identities.hpp"
#include "plap/metric.hpp"
#include "plap/oracles.hpp"
#include "plap/solver.hpp"

namespace plap {

using json = nlohmann::json;

enum class Command { kSolve, kVerify, kSweep, kMatcheck, kRadial };

std::string command_name(Command c);
/// Throws ValidationError on unknown names.
Command parse_command(const std::string& name);

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitSolverFailure = 3,
};

struct RadialConfig {
  std::vector<int> n{2, 3};
  std::vector<double> p{1.5, 2.0, 3.0, 4.0};
  double R = 1.0;
  int cells = 2000;
  double tolerance = 1e-4;
};

struct ExperimentConfig {
  std::optional<Command> command;
  DomainSpec domain = Disk{1.0};
  ConformalMetric metric = ConformalMetric::flat();
  std::vector<double> p{2.0};
  std::vector<double> h{0.05};
  MeshOptions mesh;
  SolveConfig solver;
  RecoveryOptions recovery;
  TraceOptions trace;
  IdentityTolerances tolerances;
  std::string out_dir = "plap-out";
  bool plot_data = true;
  std::uint64_t seed = 20240611;
  /// Grid points solved concurrently; 0 selects the hardware concurrency.
  int threads = 1;
  SweepConfig matcheck;
  double gap_tolerance = 1e-12;
  RadialConfig radial;
  /// The validated document, echoed into reports.
  json source;
};

/// Schema validation, then semantic checks (domain invariants, metric params, solver
/// settings). Throws ValidationError listing every violation.
ExperimentConfig parse_config(const json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One solved (p, h) grid point with everything the reports and plot files need.
struct CaseResult {
  double p = 2.0;
  double h = 0.05;
  ConformalMetric metric;
  TriMesh mesh;
  BoundaryGeometry bg;
  Solution solution;
  DomainMeasures measures;
  DerivativeBundle bundle;
  BoundaryTrace trace;
  std::optional<IdentityReport> report;
  /// Max-norm error against the radial profile (flat or constant metric on a disk).
  std::optional<double> radial_error;
};

/// Mesh, solve and, when `identities` is set, trace and identity suite.
CaseResult run_case(const ExperimentConfig& config, double p, double h, bool identities);

/// "p<p>_h<h>", used in per-run file names.
std::string case_tag(double p, double h);

json case_to_json(const ExperimentConfig& config, const CaseResult& c);

/// Boundary profile, x-axis slice and convergence table for each case. Writes nothing and
/// logs a warning for an empty set. Throws std::filesystem::filesystem_error when the
/// directory cannot be written.
void emit_plot_data(const std::vector<CaseResult>& cases, const std::filesystem::path& dir,
                    std::ostream& log);

/// Sweep CSV header and one row per case.
void write_sweep_csv(std::ostream& out, const std::vector<CaseResult>& cases);

struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
};

/// Executes `command` and writes its files. Errors are mapped to exit codes and reported
/// as error.json in the output directory (when writable) and on `log`.
int run(Command command, const std::filesystem::path& config_path,
        const RunOverrides& overrides, std::ostream& log);
int run_document(Command command, const json& config_doc, const RunOverrides& overrides,
                 std::ostream& log);

/// Report document for a finished command; `timestamp` is the only nondeterministic key.
json report_header(Command command, const ExperimentConfig& config);

}  // namespace plap
