// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any is red.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "plap/analytic.hpp"
#include "plap/identities.hpp"
#include "plap/oracles.hpp"
#include "support.hpp"

using namespace plap;
using testing::solved;
using std::numbers::pi;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ConformalMetric kFlat = ConformalMetric::flat();
const ConformalMetric kRicciBowl = ConformalMetric::poly({0, 0, 0, -0.125, 0, -0.125});

// Mesh sizes: the disk at p = 1.5 and the ellipse Fundamental Identity need finer meshes
// than the default 0.05 for recovery error to fall below the 2% identity tolerances.
double disk_h(double p) { return p < 2.0 ? 0.035 : 0.05; }
constexpr double kEllipseFiH = 0.025;

struct Key {
  DomainSpec spec;
  double p, h;
  ConformalMetric metric;
};
std::vector<Key> solved_cases;

const testing::Solved& solve_logged(const DomainSpec& spec, double p, double h,
                                    const ConformalMetric& metric = kFlat) {
  const auto& s = solved(spec, p, h, metric);
  for (const auto& k : solved_cases)
    if (testing::describe(k.spec) == testing::describe(spec) && k.p == p && k.h == h &&
        k.metric.kind() == metric.kind() && k.metric.params() == metric.params())
      return s;
  solved_cases.push_back({spec, p, h, metric});
  return s;
}

Verdict radial_agreement() {
  Verdict v;
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const auto& s = solve_logged(Disk{1.0}, p, 0.05);
    const RadialProfile exact = radial_exact(2, p, 1.0);
    double err = 0.0;
    for (std::size_t i = 0; i < s.mesh.num_vertices(); ++i)
      err = std::max(err, std::abs(s.solution.u.values[static_cast<Eigen::Index>(i)] -
                                   exact.u(std::min(1.0, s.mesh.vertices[i].norm()))));
    const double tol = p == 2.0 ? 1e-3 : 5e-3;
    v.require(err <= tol, fmt("p=%g err %.2e <= %.0e", p, err, tol));
  }
  return v;
}

Verdict p_constancy() {
  Verdict v;
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const auto& s = solve_logged(Disk{1.0}, p, 0.05);
    const double P0 = p_ball_constant(2, p, 1.0);
    const auto P = p_function(s.bundle, p, 2.0);
    double w = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < P.size(); ++k)
      if (!s.bundle.points[k].masked) w += s.bundle.points[k].weight, mean += P[k] * s.bundle.points[k].weight;
    mean /= w;
    double var = 0.0;
    for (std::size_t k = 0; k < P.size(); ++k)
      if (!s.bundle.points[k].masked) var += (P[k] - mean) * (P[k] - mean) * s.bundle.points[k].weight;
    const double sd = std::sqrt(var / w);
    v.require(sd <= 1e-2 * P0 && std::abs(mean - P0) <= 1e-2 * P0,
              fmt("p=%g sd/P0 %.2e, |mean-P0|/P0 %.2e", p, sd / P0, std::abs(mean - P0) / P0));
  }
  return v;
}

Verdict fundamental_identity_ellipse() {
  Verdict v;
  for (double p : {2.0, 3.0}) {
    const auto& s = solve_logged(Ellipse{2.0, 1.0}, p, kEllipseFiH);
    const auto r = fundamental_identity(s.bundle, s.trace, s.measures, 0.02);
    v.require(r.volume_vs_rhs.pass && r.boundary_vs_rhs.pass && r.volume_vs_boundary.pass,
              fmt("p=%g h=%g vol/rhs %.2f%% bdry/rhs %.2f%% vol/bdry %.2f%%", p, kEllipseFiH,
                  100 * r.volume_vs_rhs.relative, 100 * r.boundary_vs_rhs.relative,
                  100 * r.volume_vs_boundary.relative));
  }
  return v;
}

Verdict heintze_karcher() {
  Verdict v;
  const double t3_ref = 10.6031;
  {
    const auto& s = solve_logged(Ellipse{2.0, 1.0}, 2.0, 0.05);
    const auto r = hk_report(s.bundle, s.trace, s.measures, 0.02);
    v.require(std::abs(r.t3 - t3_ref) <= 0.01 * t3_ref, fmt("ellipse T3 %.4f", r.t3));
    v.require(r.identity.relative <= 0.02, fmt("ellipse p=2 T1+T2 vs T3 %.2f%%", 100 * r.identity.relative));
  }
  {
    const auto& s = solve_logged(Disk{1.0}, 2.0, 0.05);
    const auto r = hk_report(s.bundle, s.trace, s.measures);
    const double scale = 2.0 * pi;
    const double worst = std::max({std::abs(r.t1), std::abs(r.t2), std::abs(r.t3)});
    v.require(worst <= 0.02 * scale, fmt("disk max|T| %.2e <= %.3f", worst, 0.02 * scale));
  }
  {
    const auto& s = solve_logged(Disk{1.0}, 2.0, 0.05, kRicciBowl);
    const auto r = hk_report(s.bundle, s.trace, s.measures, 0.03);
    v.require(r.identity.relative <= 0.03 && r.t3 >= 0.0,
              fmt("conformal disk %.2f%%, T3 %.3f", 100 * r.identity.relative, r.t3));
  }
  return v;
}

Verdict soap_bubble() {
  Verdict v;
  {
    const auto& s = solve_logged(Ellipse{2.0, 1.0}, 2.0, 0.05);
    const auto r = soap_bubble_report(s.bundle, s.trace, s.measures, 0.02);
    v.require(r.identity.pass, fmt("ellipse p=2 %.2f%%", 100 * r.identity.relative));
  }
  {
    const auto& s = solve_logged(Disk{1.0}, 2.0, 0.05);
    const auto r = soap_bubble_report(s.bundle, s.trace, s.measures);
    const double scale = s.measures.volume / 2.0;
    const double worst = std::max({std::abs(r.lhs1), std::abs(r.lhs2), std::abs(r.rhs)});
    v.require(worst <= 0.02 * scale, fmt("disk max|term| %.2e <= %.4f", worst, 0.02 * scale));
  }
  return v;
}

Verdict overdetermined() {
  Verdict v;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto& s = solve_logged(Disk{1.0}, p, disk_h(p));
    const auto r = serrin_deficit(s.trace);
    v.require(r.max_nodal_residual <= 0.03, fmt("disk p=%g nodal %.2f%%", p, 100 * r.max_nodal_residual));
  }
  const auto& s = solve_logged(Ellipse{2.0, 1.0}, 2.0, 0.05);
  const double D = serrin_deficit(s.trace).deficit, L = s.trace.perimeter();
  v.require(D >= 0.05 * L, fmt("ellipse D %.3f >= %.3f", D, 0.05 * L));
  return v;
}

Verdict matrix_inequality_check() {
  Verdict v;
  SweepConfig c;
  c.samples = 1000000;
  c.dims = {2, 3, 4};
  c.p_min = 1.1;
  c.p_max = 6.0;
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult r = matrix_inequality_sweep(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(r.min_gap >= -1e-12, fmt("min gap %.2e", r.min_gap));
  auto diag_gap = [](int n, std::vector<double> d) {
    SymMat H = SymMat::Zero(n, n);
    for (int i = 0; i < n; ++i) H(i, i) = d[i];
    SmallVec g = SmallVec::Zero(n);
    g[0] = 1.0;
    return matrix_inequality_gap(n, 2.0, H, g);
  };
  const double g2 = diag_gap(2, {1, 2}), g3 = diag_gap(3, {1, 1, 2});
  v.require(std::abs(g2) <= 1e-12 && std::abs(g3 - 0.5) <= 1e-12, fmt("witnesses %.1e, %.6f", g2, g3));
  v.require(secs <= 60.0, fmt("%.1f s", secs));
  return v;
}

Verdict subharmonicity() {
  Verdict v;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto& s = solve_logged(Ellipse{2.0, 1.0}, p, 0.05);
    const auto scan = subharmonicity_scan(s.mesh, s.bundle, kFlat, p);
    v.require(scan.min_value >= -scan.tolerance && scan.integral > 0.0,
              fmt("ellipse p=%g min %.3f vs -%.4f, integral %.3f", p, scan.min_value, scan.tolerance,
                  scan.integral));
  }
  const auto& s = solve_logged(Disk{1.0}, 2.0, 0.05);
  const auto scan = subharmonicity_scan(s.mesh, s.bundle, kFlat, 2.0);
  v.require(scan.fraction_within_tolerance >= 0.9,
            fmt("disk %.1f%% within tol", 100 * scan.fraction_within_tolerance));
  return v;
}

Verdict pointwise_algebra() {
  Verdict v;
  const auto fields = analytic_catalogue();
  double worst_bochner = 0.0, worst_luP = 0.0;
  int fields_ok = 0;
  for (const auto& metric : {kFlat, kRicciBowl})
    for (const auto& f : fields) {
      int points = 0;
      // Points of the disk |x| <= 0.9, the region the catalogue fields are built for.
      for (int i = 0; i < 17; ++i)
        for (int j = 0; j < 17; ++j) {
          const Vec2 x(-0.9 + 0.1125 * i + 0.005 * j, -0.9 + 0.1125 * j);
          if (x.norm() > 0.9) continue;
          bool counted = false;
          for (double p : {1.5, 2.0, 3.0, 4.0}) {
            const auto b = p_bochner_residual(f, metric, p, x);
            const auto c = luP_cross_check(f, metric, p, 2.0, x);
            if (!b || !c) continue;
            worst_bochner = std::max(worst_bochner, std::abs(*b));
            worst_luP = std::max(worst_luP, std::abs(c->difference));
            counted = true;
          }
          points += counted;
        }
      fields_ok += points >= 100;
    }
  v.require(fields_ok >= 40, fmt("%d field/metric pairs with >=100 points", fields_ok));
  v.require(worst_bochner <= 1e-10, fmt("bochner %.1e", worst_bochner));
  v.require(worst_luP <= 1e-10, fmt("L_u P %.1e", worst_luP));
  return v;
}

Verdict flux_balance_all() {
  Verdict v;
  double worst = 0.0;
  for (const auto& k : solved_cases) {
    const auto& s = solved(k.spec, k.p, k.h, k.metric);
    worst = std::max(worst, flux_balance(s.trace, s.measures).relative);
  }
  v.require(worst <= 0.01, fmt("%zu cases, worst %.3f%%", solved_cases.size(), 100 * worst));
  return v;
}

Verdict flat_degeneration() {
  Verdict v;
  const auto zero = ConformalMetric::poly(std::vector<double>(15, 0.0));
  double worst = 0.0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a))); };
  struct Case {
    DomainSpec spec;
    double p;
  };
  for (const Case& c : {Case{Ellipse{2.0, 1.0}, 3.0}, Case{Disk{1.0}, 1.5}}) {
    const auto& a = solve_logged(c.spec, c.p, 0.1);
    const auto& b = solve_logged(c.spec, c.p, 0.1, zero);
    track((a.solution.u.values - b.solution.u.values).cwiseAbs().maxCoeff(), 0.0);
    track(a.measures.volume, b.measures.volume);
    track(a.measures.perimeter, b.measures.perimeter);
    for (std::size_t k = 0; k < a.bundle.points.size(); ++k) {
      track(a.bundle.points[k].grad_norm, b.bundle.points[k].grad_norm);
      track(a.bundle.points[k].dv, b.bundle.points[k].dv);
      track(a.bundle.points[k].a_u, b.bundle.points[k].a_u);
    }
    const auto Hg = geodesic_boundary_curvature(zero, a.bg);
    for (std::size_t k = 0; k < Hg.size(); ++k) track(a.bg.nodes[k].H, Hg[k]);
    for (std::size_t k = 0; k < a.trace.nodes.size(); ++k) {
      track(a.trace.nodes[k].u_nu, b.trace.nodes[k].u_nu);
      track(a.trace.nodes[k].u_nunu, b.trace.nodes[k].u_nunu);
      track(a.trace.nodes[k].weight, b.trace.nodes[k].weight);
    }
    const auto ra = identity_suite(a.mesh, a.bundle, a.trace, kFlat, a.measures, false);
    const auto rb = identity_suite(b.mesh, b.bundle, b.trace, zero, b.measures, false);
    track(ra.flux.lhs, rb.flux.lhs);
    track(ra.fundamental.lhs_volume, rb.fundamental.lhs_volume);
    track(ra.fundamental.lhs_boundary, rb.fundamental.lhs_boundary);
    track(ra.fundamental.rhs, rb.fundamental.rhs);
    track(ra.hk->t1, rb.hk->t1);
    track(ra.hk->t2, rb.hk->t2);
    track(ra.hk->t3, rb.hk->t3);
    track(ra.sbt.lhs2, rb.sbt.lhs2);
    track(ra.sbt.rhs, rb.sbt.rhs);
    track(ra.serrin->deficit, rb.serrin->deficit);
    const Vec2 x(0.3, -0.2);
    track(gaussian_curvature(kFlat, x), gaussian_curvature(zero, x));
    track(ricci_quadratic(kFlat, x, Vec2(1, 2)), ricci_quadratic(zero, x, Vec2(1, 2)));
  }
  v.require(worst <= 1e-12, fmt("max deviation %.1e", worst));
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  // Flux balance runs last so it covers every case solved before it.
  const std::vector<Criterion> criteria{
      {1, "radial oracle agreement", radial_agreement},
      {2, "P-constancy on the disk", p_constancy},
      {3, "fundamental identity on the ellipse", fundamental_identity_ellipse},
      {4, "Heintze-Karcher identity and inequality", heintze_karcher},
      {5, "soap bubble identity", soap_bubble},
      {6, "overdetermined characterization", overdetermined},
      {7, "matrix inequality sweep", matrix_inequality_check},
      {8, "subharmonicity of P", subharmonicity},
      {9, "pointwise algebra", pointwise_algebra},
      {11, "flat-metric degeneration", flat_degeneration},
      {10, "flux balance", flux_balance_all},
  };
  std::vector<std::pair<int, std::string>> lines;
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    lines.emplace_back(c.id, fmt("[%s] %2d %-40s", v.pass ? "PASS" : "FAIL", c.id, c.name) + " (" +
                                 fmt("%.1f s", secs) + ") " + v.detail);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%zu/%zu criteria passed\n", lines.size() - failed, lines.size());
  return failed ? 1 : 0;
}
