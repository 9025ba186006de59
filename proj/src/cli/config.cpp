#include <fstream>
#include <sstream>

#include "plap/error.hpp"
#include "plap/experiment.hpp"
#include "plap/schema.hpp"

namespace plap {
namespace {

DomainSpec parse_domain(const json& d) {
  const std::string kind = d.at("kind").get<std::string>();
  if (kind == "disk") return Disk{d.at("R").get<double>()};
  if (kind == "ellipse") return Ellipse{d.at("a").get<double>(), d.at("b").get<double>()};
  if (kind == "annulus")
    return Annulus{d.at("R_in").get<double>(), d.at("R_out").get<double>()};
  PolarStar star;
  star.r0 = d.at("r0").get<double>();
  star.cos_coeffs = d.value("cos", std::vector<double>{});
  star.sin_coeffs = d.value("sin", std::vector<double>{});
  return star;
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (auto it = obj.find(key); it != obj.end()) target = it->get<T>();
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

}  // namespace

std::string command_name(Command c) {
  switch (c) {
    case Command::kSolve: return "solve";
    case Command::kVerify: return "verify";
    case Command::kSweep: return "sweep";
    case Command::kMatcheck: return "matcheck";
    case Command::kRadial: return "radial";
  }
  return "verify";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::kSolve, Command::kVerify, Command::kSweep, Command::kMatcheck,
                    Command::kRadial})
    if (command_name(c) == name) return c;
  throw ValidationError("unknown command \"" + name + "\"");
}

ExperimentConfig parse_config(const json& doc) {
  static const SchemaValidator validator(config_schema());
  if (auto errors = validator.errors(doc); !errors.empty())
    throw ValidationError("config does not match the schema:" + join(errors));

  ExperimentConfig c;
  c.source = doc;
  std::vector<std::string> problems;
  auto guard = [&](const char* where, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      problems.push_back(std::string(where) + ": " + e.what());
    }
  };

  if (doc.contains("command")) c.command = parse_command(doc["command"].get<std::string>());
  if (doc.contains("domain")) {
    c.domain = parse_domain(doc["domain"]);
    guard("/domain", [&] { validate(c.domain); });
  }
  if (doc.contains("metric")) {
    const json& m = doc["metric"];
    guard("/metric", [&] {
      c.metric = ConformalMetric::from_kind(m.at("kind").get<std::string>(),
                                            m.value("params", std::vector<double>{}));
    });
    c.metric.declare_nonnegative_ricci(m.value("nonnegative_ricci", false));
  }
  read(doc, "p", c.p);
  read(doc, "h", c.h);
  if (auto it = doc.find("mesh"); it != doc.end()) {
    read(*it, "min_angle_deg", c.mesh.min_angle_deg);
    read(*it, "smoothing_iterations", c.mesh.smoothing_iterations);
    read(*it, "symmetric_about_x_axis", c.mesh.symmetric_about_x_axis);
  }
  if (auto it = doc.find("solver"); it != doc.end()) {
    read(*it, "eps0", c.solver.eps0);
    read(*it, "rho", c.solver.rho);
    read(*it, "eps_min", c.solver.eps_min);
    read(*it, "newton_tol", c.solver.newton_tol);
    read(*it, "max_newton_iter", c.solver.max_newton_iter);
    read(*it, "backtrack", c.solver.backtrack);
    read(*it, "max_backtracks", c.solver.max_backtracks);
    read(*it, "quadrature_order", c.solver.quadrature_order);
  }
  guard("/solver", [&] {
    for (double p : c.p) {
      SolveConfig s = c.solver;
      s.p = p;
      s.validate();
    }
  });
  if (auto it = doc.find("recovery"); it != doc.end()) {
    if (it->value("scheme", std::string("polynomial_preserving")) == "averaging")
      c.recovery.scheme = RecoveryScheme::kAveraging;
    read(*it, "delta_crit", c.recovery.delta_crit);
  }
  if (auto it = doc.find("trace"); it != doc.end()) {
    read(*it, "depths", c.trace.depths);
    read(*it, "mask_rings", c.trace.mask_rings);
  }
  if (auto it = doc.find("tolerances"); it != doc.end()) {
    read(*it, "flux", c.tolerances.flux);
    read(*it, "fundamental", c.tolerances.fundamental);
    read(*it, "hk", c.tolerances.hk);
    read(*it, "sbt", c.tolerances.sbt);
    read(*it, "equivalence", c.tolerances.equivalence);
    read(*it, "hk_inequality", c.tolerances.hk_inequality);
  }
  if (auto it = doc.find("output"); it != doc.end()) {
    read(*it, "dir", c.out_dir);
    read(*it, "plot_data", c.plot_data);
  }
  read(doc, "seed", c.seed);
  read(doc, "threads", c.threads);
  if (auto it = doc.find("matcheck"); it != doc.end()) {
    read(*it, "samples", c.matcheck.samples);
    read(*it, "shards", c.matcheck.shards);
    read(*it, "dims", c.matcheck.dims);
    read(*it, "p_min", c.matcheck.p_min);
    read(*it, "p_max", c.matcheck.p_max);
    read(*it, "threads", c.matcheck.threads);
    read(*it, "gap_tolerance", c.gap_tolerance);
  }
  if (c.matcheck.p_min >= c.matcheck.p_max)
    problems.push_back("/matcheck: p_min must be smaller than p_max");
  if (auto it = doc.find("radial"); it != doc.end()) {
    read(*it, "n", c.radial.n);
    read(*it, "p", c.radial.p);
    read(*it, "R", c.radial.R);
    read(*it, "cells", c.radial.cells);
    read(*it, "tolerance", c.radial.tolerance);
  }
  for (int n : c.radial.n)
    if (n < 2) problems.push_back("/radial/n: dimension must be >= 2");

  if (!problems.empty()) throw ValidationError("invalid config:" + join(problems));
  c.matcheck.seed = c.seed;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace plap
