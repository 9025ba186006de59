#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "plap/error.hpp"
#include "plap/experiment.hpp"

namespace plap {
namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json entry_json(const IdentityEntry& e) {
  return {{"name", e.name},         {"lhs", e.lhs},
          {"rhs", e.rhs},           {"residual", e.residual},
          {"relative", e.relative}, {"tolerance", e.tolerance},
          {"pass", e.pass}};
}

json domain_json(const DomainSpec& spec) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Disk>) return {{"kind", "disk"}, {"R", d.R}};
        if constexpr (std::is_same_v<T, Ellipse>)
          return {{"kind", "ellipse"}, {"a", d.a}, {"b", d.b}};
        if constexpr (std::is_same_v<T, Annulus>)
          return {{"kind", "annulus"}, {"R_in", d.R_in}, {"R_out", d.R_out}};
        if constexpr (std::is_same_v<T, PolarStar>)
          return {{"kind", "polar_star"}, {"r0", d.r0}, {"cos", d.cos_coeffs},
                  {"sin", d.sin_coeffs}};
      },
      spec);
}

std::ofstream open_file(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::filesystem::filesystem_error("cannot write", path,
                                            std::make_error_code(std::errc::permission_denied));
  out << std::setprecision(12);
  return out;
}

std::optional<double> radial_error(const ExperimentConfig& config, const TriMesh& mesh,
                                   const Solution& sol, double p) {
  const auto* disk = std::get_if<Disk>(&config.domain);
  const auto kind = config.metric.kind();
  if (!disk || (kind != ConformalMetric::Kind::kFlat && kind != ConformalMetric::Kind::kConstant))
    return std::nullopt;
  const double c = kind == ConformalMetric::Kind::kConstant ? config.metric.params().at(0) : 0.0;
  const double scale = std::exp(p * c / (p - 1.0));
  const RadialProfile exact = radial_exact(2, p, disk->R);
  double err = 0.0;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    err = std::max(err, std::abs(sol.u.values[static_cast<Eigen::Index>(v)] -
                                 scale * exact.u(std::min(mesh.vertices[v].norm(), disk->R))));
  return err;
}

// Empty cell for an absent value.
struct Cell {
  std::optional<double> v;
};

std::ostream& operator<<(std::ostream& out, const Cell& c) {
  if (c.v) out << *c.v;
  return out;
}

}  // namespace

std::string case_tag(double p, double h) {
  std::ostringstream s;
  s << "p" << p << "_h" << h;
  return s.str();
}

CaseResult run_case(const ExperimentConfig& config, double p, double h, bool identities) {
  CaseResult c;
  c.p = p;
  c.h = h;
  c.metric = config.metric;
  c.mesh = build_mesh(config.domain, h, config.mesh);
  c.bg = boundary_geometry(config.domain, c.mesh);
  SolveConfig s = config.solver;
  s.p = p;
  c.solution = solve(c.mesh, config.metric, s);
  c.measures = domain_measures(c.mesh, c.bg, config.metric);
  c.radial_error = radial_error(config, c.mesh, c.solution, p);
  if (identities) {
    c.bundle = recover_derivatives(c.mesh, c.solution.u, config.metric, config.recovery);
    c.trace = boundary_trace(c.mesh, c.bundle, c.bg, config.metric, p, config.trace);
    c.report = identity_suite(c.mesh, c.bundle, c.trace, config.metric, c.measures,
                              is_disk(config.domain), config.tolerances);
  }
  return c;
}

json case_to_json(const ExperimentConfig& config, const CaseResult& c) {
  std::size_t boundary_vertices = 0;
  for (const auto& loop : c.mesh.boundary_loops) boundary_vertices += loop.size();
  int newton = 0;
  for (const auto& step : c.solution.steps) newton += step.newton_iterations;

  json metric = {{"kind", config.metric.kind_name()},
                 {"params", config.metric.params()},
                 {"nonnegative_ricci", config.metric.nonnegative_ricci()}};
  json run = {
      {"tag", case_tag(c.p, c.h)},
      {"p", c.p},
      {"h", c.h},
      {"n", 2},
      {"domain", domain_json(config.domain)},
      {"metric", metric},
      {"mesh",
       {{"vertices", c.mesh.num_vertices()},
        {"triangles", c.mesh.num_triangles()},
        {"boundary_vertices", boundary_vertices},
        {"min_angle_deg", min_angle_deg(c.mesh)}}},
      {"solver",
       {{"final_eps", c.solution.final_eps},
        {"eps_steps", c.solution.steps.size()},
        {"newton_iterations", newton},
        {"final_residual",
         c.solution.steps.empty() ? 0.0 : c.solution.steps.back().residual_norm},
        {"min_u", c.solution.min_u},
        {"max_u", c.solution.max_u},
        {"interior_positive", c.solution.interior_positive},
        {"masked_fraction", c.solution.masked_fraction},
        {"radial_error", c.radial_error ? json(*c.radial_error) : json(nullptr)}}},
      {"measures",
       {{"volume", c.measures.volume},
        {"perimeter", c.measures.perimeter},
        {"H0", c.measures.perimeter / (2.0 * c.measures.volume)}}},
  };
  if (!c.report) {
    run["pass"] = c.solution.interior_positive;
    return run;
  }
  const IdentityReport& r = *c.report;
  run["trace"] = {{"nodes", c.trace.nodes.size()},
                  {"flagged", c.trace.flagged_count},
                  {"max_boundary_pde_residual", c.trace.max_boundary_pde_residual},
                  {"all_u_nu_negative", c.trace.all_u_nu_negative}};
  run["delta_crit"] = r.delta_crit;
  run["flux"] = entry_json(r.flux);
  run["flux_variational"] = entry_json(IdentityEntry::make(
      "flux_variational", variational_boundary_flux(c.mesh, c.metric, c.solution, c.p),
      -c.measures.volume, c.measures.volume, config.tolerances.flux));
  run["fundamental"] = {{"lhs_volume", r.fundamental.lhs_volume},
                        {"lhs_boundary", r.fundamental.lhs_boundary},
                        {"rhs", r.fundamental.rhs},
                        {"luP_integral", r.fundamental.luP_integral},
                        {"masked_fraction", r.fundamental.masked_fraction},
                        {"volume_vs_rhs", entry_json(r.fundamental.volume_vs_rhs)},
                        {"boundary_vs_rhs", entry_json(r.fundamental.boundary_vs_rhs)},
                        {"volume_vs_boundary", entry_json(r.fundamental.volume_vs_boundary)},
                        {"pass", r.fundamental.pass}};
  if (r.hk)
    run["hk"] = {{"t1", r.hk->t1},
                 {"t2", r.hk->t2},
                 {"t3", r.hk->t3},
                 {"inv_H_integral", r.hk->inv_H_integral},
                 {"identity", entry_json(r.hk->identity)},
                 {"hk_inequality", r.hk->hk_inequality},
                 {"pass", r.hk->pass}};
  else
    run["hk"] = nullptr;
  run["sbt"] = {{"lhs1", r.sbt.lhs1},
                {"lhs2", r.sbt.lhs2},
                {"rhs", r.sbt.rhs},
                {"H0", r.sbt.H0},
                {"max_H_deviation", r.sbt.max_H_deviation},
                {"identity", entry_json(r.sbt.identity)},
                {"pass", r.sbt.pass}};
  if (r.serrin)
    run["serrin"] = {{"deficit", r.serrin->deficit},
                     {"relative_deficit", r.serrin->deficit / r.perimeter},
                     {"max_nodal_residual", r.serrin->max_nodal_residual}};
  else
    run["serrin"] = nullptr;
  if (r.scan)
    run["subharmonicity"] = {{"min_value", finite_or_null(r.scan->min_value)},
                             {"argmin", {r.scan->argmin.x(), r.scan->argmin.y()}},
                             {"tolerance", r.scan->tolerance},
                             {"min_within_tolerance", r.scan->pass},
                             {"integral", r.scan->integral},
                             {"scanned", r.scan->scanned},
                             {"excluded", r.scan->excluded},
                             {"fraction_within_tolerance", r.scan->fraction_within_tolerance},
                             {"bin_edges", r.scan->bin_edges},
                             {"bin_counts", r.scan->bin_counts}};
  else
    run["subharmonicity"] = nullptr;
  if (r.flags)
    run["flags"] = {{"A", r.flags->ball_domain},        {"B", r.flags->B},
                    {"C", r.flags->radial},             {"D", r.flags->D},
                    {"E", r.flags->E},                  {"B_deviation", r.flags->B_deviation},
                    {"D_deviation", r.flags->D_deviation}, {"E_value", r.flags->E_value},
                    {"E_deviation", r.flags->E_deviation}, {"tolerance", r.flags->tolerance}};
  else
    run["flags"] = nullptr;
  run["skipped"] = r.skipped;
  run["pass"] = r.pass;
  return run;
}

void write_sweep_csv(std::ostream& out, const std::vector<CaseResult>& cases) {
  out << std::setprecision(12);
  out << "p,h,vertices,volume,perimeter,H0,masked_fraction,flux_relative,"
         "fundamental_lhs_volume,fundamental_lhs_boundary,fundamental_rhs,"
         "fundamental_volume_relative,fundamental_boundary_relative,"
         "fundamental_cross_relative,hk_t1,hk_t2,hk_t3,hk_relative,sbt_lhs1,sbt_lhs2,sbt_rhs,"
         "sbt_relative,serrin_deficit,max_boundary_pde_residual,scan_min,scan_tolerance,pass\n";
  for (const auto& c : cases) {
    if (!c.report) continue;
    const IdentityReport& r = *c.report;
    const auto& f = r.fundamental;
    auto hk = [&](double HKReport::*m) { return Cell{r.hk ? std::optional(*r.hk.*m) : std::nullopt}; };
    const Cell hk_rel{r.hk ? std::optional(r.hk->identity.relative) : std::nullopt};
    const Cell serrin{r.serrin ? std::optional(r.serrin->deficit) : std::nullopt};
    const Cell scan_min{r.scan && std::isfinite(r.scan->min_value) ? std::optional(r.scan->min_value)
                                                                   : std::nullopt};
    const Cell scan_tol{r.scan ? std::optional(r.scan->tolerance) : std::nullopt};
    out << c.p << ',' << c.h << ',' << c.mesh.num_vertices() << ',' << r.volume << ','
        << r.perimeter << ',' << r.H0 << ',' << r.masked_fraction << ',' << r.flux.relative << ','
        << f.lhs_volume << ',' << f.lhs_boundary << ',' << f.rhs << ','
        << f.volume_vs_rhs.relative << ',' << f.boundary_vs_rhs.relative << ','
        << f.volume_vs_boundary.relative << ',' << hk(&HKReport::t1) << ','
        << hk(&HKReport::t2) << ',' << hk(&HKReport::t3) << ',' << hk_rel << ',' << r.sbt.lhs1
        << ',' << r.sbt.lhs2 << ',' << r.sbt.rhs << ',' << r.sbt.identity.relative << ','
        << serrin << ',' << c.trace.max_boundary_pde_residual << ',' << scan_min << ',' << scan_tol
        << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

void emit_plot_data(const std::vector<CaseResult>& cases, const std::filesystem::path& dir,
                    std::ostream& log) {
  std::vector<const CaseResult*> reported;
  for (const auto& c : cases)
    if (c.report) reported.push_back(&c);
  if (reported.empty()) {
    log << "warning: no reports, no plot data written\n";
    return;
  }
  std::filesystem::create_directories(dir);

  for (const CaseResult* c : reported) {
    const std::string tag = case_tag(c->p, c->h);
    const double psi_exp = c->p - 1.0;
    {
      auto out = open_file(dir / ("boundary_" + tag + ".csv"));
      out << "s,x,y,H,u_nu,overdetermined_residual,flagged\n";
      for (const auto& node : c->trace.nodes) {
        const double psi = std::copysign(std::pow(std::abs(node.u_nu), psi_exp), node.u_nu);
        out << node.s << ',' << node.x.x() << ',' << node.x.y() << ',' << node.H << ','
            << node.u_nu << ',' << c->trace.n * node.H * psi + 1.0 << ','
            << (node.flagged ? 1 : 0) << '\n';
      }
    }
    {
      // Slice along the x-axis through the nodal fields.
      auto out = open_file(dir / ("slice_" + tag + ".csv"));
      out << "x,y,u,grad_norm,P\n";
      double lo = c->mesh.vertices.front().x(), hi = lo;
      for (const auto& v : c->mesh.vertices) {
        lo = std::min(lo, v.x());
        hi = std::max(hi, v.x());
      }
      const PointLocator locator(c->mesh);
      const int samples = 201;
      for (int k = 0; k < samples; ++k) {
        const Vec2 x(lo + (hi - lo) * k / (samples - 1.0), 0.0);
        const auto hit = locator.locate(x);
        if (!hit) continue;
        const auto& tri = c->mesh.triangles[hit->triangle];
        double u = 0.0;
        Vec2 g = Vec2::Zero();
        for (int i = 0; i < 3; ++i) {
          u += hit->bary[i] * c->solution.u.values[tri[i]];
          g += hit->bary[i] * c->bundle.nodal.grad[tri[i]];
        }
        const double gn = g.norm() / c->metric.scale(x);
        out << x.x() << ',' << x.y() << ',' << u << ',' << gn << ','
            << (c->p - 1.0) / c->p * std::pow(gn, c->p) + u / 2.0 << '\n';
      }
    }
  }

  std::vector<const CaseResult*> sorted = reported;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CaseResult* a, const CaseResult* b) {
    return a->p != b->p ? a->p < b->p : a->h > b->h;
  });
  auto out = open_file(dir / "convergence.csv");
  out << "p,h,flux_relative,fundamental_volume_relative,fundamental_boundary_relative,"
         "hk_relative,sbt_relative,serrin_relative_deficit,max_boundary_pde_residual\n";
  for (const CaseResult* c : sorted) {
    const IdentityReport& r = *c->report;
    out << c->p << ',' << c->h << ',' << r.flux.relative << ','
        << r.fundamental.volume_vs_rhs.relative << ','
        << r.fundamental.boundary_vs_rhs.relative << ','
        << Cell{r.hk ? std::optional(r.hk->identity.relative) : std::nullopt} << ','
        << r.sbt.identity.relative << ','
        << Cell{r.serrin ? std::optional(r.serrin->deficit / r.perimeter) : std::nullopt} << ','
        << c->trace.max_boundary_pde_residual << '\n';
  }
}

}  // namespace plap
