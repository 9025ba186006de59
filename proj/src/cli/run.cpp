#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "plap/error.hpp"
#include "plap/experiment.hpp"

namespace plap {
namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out)
    throw fs::filesystem_error("cannot write", path,
                               std::make_error_code(std::errc::permission_denied));
  out << doc.dump(2) << '\n';
}

template <typename Fn>
void write_text(const fs::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out)
    throw fs::filesystem_error("cannot write", path,
                               std::make_error_code(std::errc::permission_denied));
  fn(out);
}

/// Solves every (p, h) grid point; results keep grid order regardless of scheduling.
std::vector<CaseResult> run_cases(const ExperimentConfig& config, bool identities,
                                  std::ostream& log) {
  std::vector<std::pair<double, double>> grid;
  for (double p : config.p)
    for (double h : config.h) grid.emplace_back(p, h);

  std::vector<CaseResult> results(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next++) < grid.size();) {
      try {
        results[k] = run_case(config, grid[k].first, grid[k].second, identities);
        std::lock_guard lock(log_mutex);
        log << "  " << case_tag(grid[k].first, grid[k].second) << " done\n";
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

json witness_json(const SweepWitness& w) {
  json H = json::array();
  for (Eigen::Index i = 0; i < w.H.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < w.H.cols(); ++j) row.push_back(w.H(i, j));
    H.push_back(row);
  }
  json g = json::array();
  for (Eigen::Index i = 0; i < w.g.size(); ++i) g.push_back(w.g[i]);
  return {{"n", w.n},         {"p", w.p}, {"gap", w.gap}, {"refined_gap", w.refined_gap},
          {"shard", w.shard}, {"H", H},   {"g", g}};
}

json hand_witness(const std::string& name, int n, double p, const std::vector<double>& diag,
                  double expected, double tol) {
  SymMat H = SymMat::Zero(n, n);
  for (int i = 0; i < n; ++i) H(i, i) = diag[static_cast<std::size_t>(i)];
  SmallVec g = SmallVec::Zero(n);
  g[0] = 1.0;
  const MatrixInequalitySides s = matrix_inequality(n, p, H, g);
  json Hj = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int j = 0; j < n; ++j) row.push_back(H(i, j));
    Hj.push_back(row);
  }
  json gj = json::array();
  for (int i = 0; i < n; ++i) gj.push_back(g[i]);
  return {{"name", name},  {"n", n},         {"p", p},
          {"lhs", s.lhs},  {"rhs", s.rhs},   {"gap", s.gap},
          {"expected_gap", expected},        {"H", Hj},
          {"g", gj},       {"pass", std::abs(s.gap - expected) <= tol}};
}

int verify_like(Command command, const ExperimentConfig& config, const fs::path& out,
                json& report, std::ostream& log) {
  const bool identities = command != Command::kSolve;
  std::vector<CaseResult> cases = run_cases(config, identities, log);
  json runs = json::array();
  bool pass = true;
  for (const auto& c : cases) {
    json run = case_to_json(config, c);
    const std::string tag = case_tag(c.p, c.h);
    if (command == Command::kVerify) {
      const std::string name = "trace_" + tag + ".csv";
      write_text(out / name, [&](std::ostream& s) { write_trace_csv(s, c.trace); });
      run["trace"]["csv"] = name;
    } else if (command == Command::kSolve) {
      write_text(out / ("mesh_" + tag + ".txt"), [&](std::ostream& s) { write_mesh(s, c.mesh); });
      write_text(out / ("solution_" + tag + ".csv"),
                 [&](std::ostream& s) { write_nodal_csv(s, c.mesh, "u", c.solution.u); });
    }
    pass = pass && run["pass"].get<bool>();
    runs.push_back(std::move(run));
  }
  if (command == Command::kSweep)
    write_text(out / "sweep.csv", [&](std::ostream& s) { write_sweep_csv(s, cases); });
  if (command == Command::kVerify && config.plot_data) emit_plot_data(cases, out / "plots", log);
  report["runs"] = std::move(runs);
  report["pass"] = pass;
  return pass ? kExitOk : kExitCheckFailed;
}

int matcheck(const ExperimentConfig& config, const fs::path& out, json& report,
             std::ostream& log) {
  const SweepResult r = matrix_inequality_sweep(config.matcheck);
  log << "  " << r.samples << " samples in " << std::fixed << std::setprecision(2) << r.seconds
      << " s\n";
  write_text(out / "witnesses.csv", [&](std::ostream& s) { write_sweep_csv(s, r); });
  const double tol = config.gap_tolerance;
  json hands = json::array({
      hand_witness("n2_p2_diag_1_2", 2, 2.0, {1.0, 2.0}, 0.0, 1e-12),
      hand_witness("n3_p2_diag_1_1_2", 3, 2.0, {1.0, 1.0, 2.0}, 0.5, 1e-12),
      hand_witness("n2_p3_identity", 2, 3.0, {1.0, 1.0}, 0.0, 1e-12),
  });
  bool pass = r.min_gap >= -tol && r.min_refined_gap >= -tol;
  for (const auto& h : hands) pass = pass && h["pass"].get<bool>();
  report["matcheck"] = {{"samples", r.samples},
                        {"shards", config.matcheck.shards},
                        {"dims", config.matcheck.dims},
                        {"p_min", config.matcheck.p_min},
                        {"p_max", config.matcheck.p_max},
                        {"min_gap", r.min_gap},
                        {"min_refined_gap", r.min_refined_gap},
                        {"gap_tolerance", tol},
                        {"witness", witness_json(r.witness)},
                        {"refined_witness", witness_json(r.refined_witness)},
                        {"hand_witnesses", hands},
                        {"csv", "witnesses.csv"},
                        {"pass", pass}};
  report["pass"] = pass;
  return pass ? kExitOk : kExitCheckFailed;
}

int radial(const ExperimentConfig& config, const fs::path& out, json& report) {
  const RadialConfig& rc = config.radial;
  json rows = json::array();
  bool pass = true;
  std::ostringstream csv;
  csv << std::setprecision(12)
      << "n,p,R,cells,u0_exact,u0_fd,max_error,slope_exact,slope_fd,slope_error,"
         "max_ode_residual,P0,P_spread,pass\n";
  for (int n : rc.n) {
    for (double p : rc.p) {
      const RadialProfile exact = radial_exact(n, p, rc.R);
      const RadialProfile fd = radial_fd_solve(n, p, rc.R, rc.cells);
      const double P0 = p_ball_constant(n, p, rc.R);
      double max_error = 0.0, ode = 0.0, spread = 0.0;
      const int samples = 1000;
      for (int k = 0; k <= samples; ++k) {
        const double r = rc.R * k / samples;
        max_error = std::max(max_error, std::abs(fd.u(r) - exact.u(r)));
        if (k > 0) ode = std::max(ode, std::abs(exact.ode_residual(r)));
        const double P = (p - 1.0) / p * std::pow(std::abs(exact.du(r)), p) + exact.u(r) / n;
        spread = std::max(spread, std::abs(P - P0));
      }
      const double slope_error = std::abs(fd.boundary_slope() - exact.boundary_slope());
      const bool ok = max_error <= rc.tolerance && slope_error <= rc.tolerance && ode <= 1e-10 &&
                      spread <= 1e-12 * std::max(1.0, P0);
      pass = pass && ok;
      rows.push_back({{"n", n},
                      {"p", p},
                      {"R", rc.R},
                      {"cells", rc.cells},
                      {"u0_exact", exact.u(0.0)},
                      {"u0_fd", fd.u(0.0)},
                      {"max_error", max_error},
                      {"slope_exact", exact.boundary_slope()},
                      {"slope_fd", fd.boundary_slope()},
                      {"slope_error", slope_error},
                      {"max_ode_residual", ode},
                      {"P0", P0},
                      {"P_spread", spread},
                      {"pass", ok}});
      csv << n << ',' << p << ',' << rc.R << ',' << rc.cells << ',' << exact.u(0.0) << ','
          << fd.u(0.0) << ',' << max_error << ',' << exact.boundary_slope() << ','
          << fd.boundary_slope() << ',' << slope_error << ',' << ode << ',' << P0 << ','
          << spread << ',' << (ok ? 1 : 0) << '\n';
    }
  }
  write_text(out / "radial.csv", [&](std::ostream& s) { s << csv.str(); });
  report["radial"] = std::move(rows);
  report["pass"] = pass;
  return pass ? kExitOk : kExitCheckFailed;
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"kind", kind}, {"message", message}};
}

int emit_error(json report, int code, const json& error, const std::optional<fs::path>& out,
               std::ostream& log) {
  report.erase("runs");
  report.erase("matcheck");
  report.erase("radial");
  report["error"] = error;
  report["pass"] = false;
  report["exit_code"] = code;
  log << report.dump(2) << '\n';
  if (out) {
    std::error_code ec;
    fs::create_directories(*out, ec);
    std::ofstream f(*out / "error.json");
    if (f) f << report.dump(2) << '\n';
  }
  return code;
}

}  // namespace

json report_header(Command command, const ExperimentConfig& config) {
  return {{"schema_version", 1},
          {"command", command_name(command)},
          {"timestamp", utc_timestamp()},
          {"seed", config.seed},
          {"config", config.source}};
}

int run_document(Command command, const json& config_doc, const RunOverrides& overrides,
                 std::ostream& log) {
  std::optional<fs::path> out;
  if (overrides.out_dir) out = *overrides.out_dir;
  json report = {{"schema_version", 1},
                 {"command", command_name(command)},
                 {"timestamp", utc_timestamp()}};
  int code = kExitOk;
  json error;
  try {
    ExperimentConfig config = parse_config(config_doc);
    if (config.command && *config.command != command)
      throw ValidationError("config is for command \"" + command_name(*config.command) +
                            "\", invoked as \"" + command_name(command) + "\"");
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.seed) config.seed = *overrides.seed;
    config.matcheck.seed = config.seed;
    out = config.out_dir;
    fs::create_directories(*out);
    report = report_header(command, config);
    log << "plap-lab " << command_name(command) << " -> " << out->string() << '\n';
    switch (command) {
      case Command::kSolve:
      case Command::kVerify:
      case Command::kSweep:
        code = verify_like(command, config, *out, report, log);
        break;
      case Command::kMatcheck:
        code = matcheck(config, *out, report, log);
        break;
      case Command::kRadial:
        code = radial(config, *out, report);
        break;
    }
  } catch (const ValidationError& e) {
    code = kExitConfigError;
    error = error_json("config", e.what());
  } catch (const PreconditionError& e) {
    code = kExitConfigError;
    error = error_json("config", e.what());
  } catch (const fs::filesystem_error& e) {
    code = kExitConfigError;
    error = error_json("io", e.what());
  } catch (const GenerationError& e) {
    code = kExitSolverFailure;
    error = error_json("solver", e.what());
    error["achieved_min_angle_deg"] = e.achieved_min_angle_deg();
  } catch (const ConvergenceError& e) {
    code = kExitSolverFailure;
    error = error_json("solver", e.what());
    error["epsilon"] = e.epsilon();
    error["residual_history"] = e.residual_history();
  } catch (const NumericalFailure& e) {
    code = kExitSolverFailure;
    error = error_json("solver", e.what());
    error["element"] = e.element();
  } catch (const std::exception& e) {
    code = kExitSolverFailure;
    error = error_json("internal", e.what());
  }

  if (!error.is_null()) return emit_error(std::move(report), code, error, out, log);
  report["exit_code"] = code;
  try {
    write_json(*out / "report.json", report);
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  log << (code == kExitOk ? "all checks passed" : "some checks failed") << '\n';
  return code;
}

int run(Command command, const fs::path& config_path, const RunOverrides& overrides,
        std::ostream& log) {
  std::optional<fs::path> out;
  if (overrides.out_dir) out = *overrides.out_dir;
  const json header = {{"schema_version", 1},
                       {"command", command_name(command)},
                       {"timestamp", utc_timestamp()}};
  std::ifstream in(config_path);
  if (!in)
    return emit_error(header, kExitConfigError,
                      error_json("config", "cannot read config " + config_path.string()), out,
                      log);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    return emit_error(header, kExitConfigError,
                      error_json("config", "config is not valid JSON: " + std::string(e.what())),
                      out, log);
  }
  return run_document(command, doc, overrides, log);
}

}  // namespace plap
