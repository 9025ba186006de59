#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "plap/analytic.hpp"
#include "plap/error.hpp"
#include "plap/oracles.hpp"
#include "plap/solver.hpp"
#include "support.hpp"

using namespace plap;
using std::numbers::pi;

namespace {

const TriMesh& disk_mesh() {
  static const TriMesh mesh = build_mesh(Disk{1.0}, 0.05);
  return mesh;
}

double radial_max_error(const TriMesh& mesh, const Solution& sol, double p) {
  const RadialProfile exact = radial_exact(2, p, 1.0);
  double err = 0.0;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    err = std::max(err, std::abs(sol.u.values[static_cast<Eigen::Index>(v)] -
                                 exact.u(std::min(mesh.vertices[v].norm(), 1.0))));
  return err;
}

}  // namespace

TEST_CASE("config invariants") {
  SolveConfig c;
  CHECK_NOTHROW(c.validate());
  c.rho = 1.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SolveConfig{};
  c.p = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SolveConfig{};
  c.eps_min = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SolveConfig{};
  c.quadrature_order = 4;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SolveConfig{};
  c.max_newton_iter = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("regularized flux coefficients") {
  const auto f2 = RegularizedFlux::at(Vec2(0.3, -0.4), 2.0, 0.7);
  CHECK(f2.coefficient == 1.0);
  CHECK((f2.tangent - Mat2::Identity()).norm() == 0.0);
  const auto f3 = RegularizedFlux::at(Vec2(0.3, 0.4), 3.0, 0.0);
  CHECK(f3.coefficient == doctest::Approx(0.5));
  CHECK(f3.tangent.determinant() > 0.0);
  CHECK(f3.tangent.trace() > 0.0);
}

TEST_CASE("zero field: residual is the negated load") {
  const TriMesh& mesh = disk_mesh();
  const auto a = assemble_energy_residual(ScalarField::zeros(mesh), mesh, ConformalMetric::flat(), 2.0, 0.3);
  CHECK(a.energy == 0.0);
  CHECK(a.residual.maxCoeff() < 0.0);
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) area += mesh.triangle_area(static_cast<int>(t));
  CHECK(a.residual.sum() == doctest::Approx(-area).epsilon(1e-12));
}

TEST_CASE("tangent is independent of eps at p = 2") {
  const TriMesh& mesh = disk_mesh();
  const auto u = ScalarField::interpolate(mesh, AnalyticField::disk_torsion(2.0, 1.0));
  const auto a = assemble_energy_residual(u, mesh, ConformalMetric::flat(), 2.0, 1e-6);
  const auto b = assemble_energy_residual(u, mesh, ConformalMetric::flat(), 2.0, 3.0);
  CHECK(Eigen::MatrixXd(a.tangent - b.tangent).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.residual - b.residual).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("tangent is symmetric and residual is the energy gradient") {
  const TriMesh mesh = build_mesh(Ellipse{2.0, 1.0}, 0.2);
  const auto u = ScalarField::interpolate(
      mesh, AnalyticField::polynomial({{0, 0, 0.5}, {2, 0, -0.1}, {0, 2, -0.4}, {1, 1, 0.05}}));
  const auto metric = ConformalMetric::poly({0, 0.1, 0, -0.125, 0, -0.125});
  const double p = 3.0, eps = 0.05;
  const auto a = assemble_energy_residual(u, mesh, metric, p, eps);
  CHECK(Eigen::MatrixXd(a.tangent - Eigen::SparseMatrix<double>(a.tangent.transpose())).cwiseAbs().maxCoeff() <= 1e-12);
  for (int v : {5, 17, 40}) {
    ScalarField up = u, dn = u;
    const double step = 1e-6;
    up.values[v] += step;
    dn.values[v] -= step;
    const double fd = (assemble_energy_residual(up, mesh, metric, p, eps, false).energy -
                       assemble_energy_residual(dn, mesh, metric, p, eps, false).energy) /
                      (2 * step);
    CHECK(fd == doctest::Approx(a.residual[v]).epsilon(1e-6));
  }
}

TEST_CASE("interpolated exact solution is nearly discrete-stationary") {
  // Nodal rows away from the boundary, and the residual tested against 1 - |x|^2.
  for (double h : {0.1, 0.05}) {
    const TriMesh mesh = build_mesh(Disk{1.0}, h);
    const auto u = ScalarField::interpolate(mesh, AnalyticField::disk_torsion(2.0, 1.0));
    const auto a = assemble_energy_residual(u, mesh, ConformalMetric::flat(), 2.0, 0.0);
    const auto load = assemble_energy_residual(ScalarField::zeros(mesh), mesh, ConformalMetric::flat(), 2.0, 0.0);
    double worst = 0.0, scale = 0.0, tested = 0.0, tested_load = 0.0;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      const auto i = static_cast<Eigen::Index>(v);
      const double psi = 1.0 - mesh.vertices[v].squaredNorm();
      if (mesh.on_boundary[v]) continue;
      tested += a.residual[i] * psi;
      tested_load += load.residual[i] * psi;
      if (mesh.vertices[v].norm() < 0.8) {
        worst = std::max(worst, std::abs(a.residual[i]));
        scale = std::max(scale, std::abs(load.residual[i]));
      }
    }
    CHECK(worst / scale <= h);
    CHECK(std::abs(tested / tested_load) <= h * h);
  }
}

TEST_CASE("non-finite contributions raise a numerical failure") {
  const TriMesh mesh = build_mesh(Disk{1.0}, 0.2);
  ScalarField u = ScalarField::zeros(mesh);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.on_boundary[v]) u.values[static_cast<Eigen::Index>(v)] = 1e200;
  CHECK_THROWS_AS(assemble_energy_residual(u, mesh, ConformalMetric::flat(), 4.0, 0.0), NumericalFailure);
}

TEST_CASE("disk solutions match the radial profile") {
  for (auto [p, tol] : {std::pair{2.0, 1e-3}, std::pair{3.0, 5e-3}, std::pair{1.5, 5e-3}, std::pair{4.0, 5e-3}}) {
    const auto& s = testing::solved(Disk{1.0}, p, 0.05);
    INFO("p = " << p);
    CHECK(radial_max_error(s.mesh, s.solution, p) <= tol);
    CHECK(s.solution.interior_positive);
    for (std::size_t v = 0; v < s.mesh.num_vertices(); ++v)
      if (s.mesh.on_boundary[v]) CHECK(s.solution.u.values[static_cast<Eigen::Index>(v)] == 0.0);
  }
}

TEST_CASE("boundary flux on the disk at p = 3") {
  const auto& s = testing::solved(Disk{1.0}, 3.0, 0.05);
  for (const auto& node : s.trace.nodes) {
    const double q = node.u_nu * std::abs(node.u_nu);
    CHECK(std::abs(q + 0.5) <= 0.02 * 0.5);
  }
}

TEST_CASE("energy decreases within every Newton solve") {
  for (double p : {1.5, 4.0}) {
    const auto& s = testing::solved(Ellipse{2.0, 1.0}, p, 0.1);
    for (const auto& step : s.solution.steps)
      for (std::size_t k = 1; k < step.energy_history.size(); ++k)
        CHECK(step.energy_history[k] <= step.energy_history[k - 1] + 64 * 2.2e-16 * std::abs(step.energy_history[k - 1]));
  }
}

TEST_CASE("regularization is inert at p = 2") {
  const TriMesh& mesh = disk_mesh();
  SolveConfig single;
  single.eps0 = 0.1;
  single.eps_min = 0.05;
  SolveConfig ladder = single;
  ladder.eps_min = 1e-8;
  const Solution a = solve(mesh, ConformalMetric::flat(), single);
  const Solution b = solve(mesh, ConformalMetric::flat(), ladder);
  CHECK(b.steps.size() > a.steps.size());
  CHECK((a.u.values - b.u.values).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("forced Newton failure carries the history") {
  const TriMesh mesh = build_mesh(Ellipse{2.0, 1.0}, 0.1);
  SolveConfig c;
  c.p = 4.0;
  c.max_newton_iter = 1;
  try {
    solve(mesh, ConformalMetric::flat(), c);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.epsilon() > 0.0);
    CHECK(!e.residual_history().empty());
  }
}

TEST_CASE("variational and traced flux balance") {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const auto& s = testing::solved(Ellipse{2.0, 1.0}, p, 0.05);
    INFO("p = " << p);
    const double F = variational_boundary_flux(s.mesh, s.metric, s.solution, p);
    CHECK(std::abs(F + s.measures.volume) <= 1e-8 * s.measures.volume);
    const IdentityEntry e = flux_balance(s.trace, s.measures);
    CHECK(e.relative <= 0.01);
  }
}

TEST_CASE("reflection-symmetric mesh gives a symmetric solution") {
  MeshOptions opt;
  opt.symmetric_about_x_axis = true;
  const TriMesh mesh = build_mesh(Disk{1.0}, 0.08, opt);
  std::vector<int> mirror(mesh.num_vertices(), -1);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    for (std::size_t w = 0; w < mesh.num_vertices(); ++w)
      if ((mesh.vertices[w] - Vec2(mesh.vertices[v].x(), -mesh.vertices[v].y())).norm() <= 1e-12)
        mirror[v] = static_cast<int>(w);
  for (double p : {2.0, 3.0}) {
    SolveConfig c;
    c.p = p;
    const Solution s = solve(mesh, ConformalMetric::flat(), c);
    double asym = 0.0;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      REQUIRE(mirror[v] >= 0);
      asym = std::max(asym, std::abs(s.u.values[static_cast<Eigen::Index>(v)] - s.u.values[mirror[v]]));
    }
    CHECK(asym <= 1e-12 * 1e3);
  }
}

TEST_CASE("convergence rates against the radial profile") {
  const std::vector<double> hs{0.2, 0.1, 0.05};
  SolveConfig c;
  c.p = 2.0;
  auto rows = convergence_study(Disk{1.0}, ConformalMetric::flat(), c, hs);
  CHECK(rows.back().observed_order >= 1.8);
  c.p = 3.0;
  rows = convergence_study(Disk{1.0}, ConformalMetric::flat(), c, hs);
  CHECK(rows.back().observed_order >= 1.2);
  c.p = 1.5;
  rows = convergence_study(Disk{1.0}, ConformalMetric::flat(), c, hs);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(std::isfinite(rows[k].l2_error));
    CHECK(rows[k].l2_error < rows[k - 1].l2_error);
    CHECK(rows[k].linf_error < rows[k - 1].linf_error);
  }
  c.p = 2.0;
  rows = convergence_study(Disk{1.0}, ConformalMetric::constant(0.2), c, {0.1});
  CHECK(rows[0].linf_error <= 2e-3);
  CHECK_THROWS_AS(convergence_study(Ellipse{2.0, 1.0}, ConformalMetric::flat(), c, hs), PreconditionError);
}

TEST_CASE("flat metric and zero exponent give identical solutions") {
  const TriMesh mesh = build_mesh(Ellipse{2.0, 1.0}, 0.1);
  for (double p : {1.5, 3.0}) {
    SolveConfig c;
    c.p = p;
    const Solution a = solve(mesh, ConformalMetric::flat(), c);
    const Solution b = solve(mesh, ConformalMetric::poly({0, 0, 0, 0, 0, 0}), c);
    CHECK((a.u.values - b.u.values).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(a.masked_fraction - b.masked_fraction) <= 1e-12);
  }
}
