#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "plap/error.hpp"
#include "plap/geometry.hpp"
#include "plap/metric.hpp"

using namespace plap;

namespace {

// phi = -(x^2 + y^2)/4
ConformalMetric quarter_paraboloid() { return ConformalMetric::poly({0, 0, 0, -0.25, 0, -0.25}); }

}  // namespace

TEST_CASE("gaussian curvature") {
  const Vec2 o = Vec2::Zero();
  CHECK(gaussian_curvature(ConformalMetric::flat(), Vec2(0.3, -0.2)) == 0.0);
  CHECK(gaussian_curvature(ConformalMetric::constant(0.7), Vec2(0.3, -0.2)) == 0.0);
  CHECK(gaussian_curvature(quarter_paraboloid(), o) == doctest::Approx(1.0).epsilon(1e-14));
  const Vec2 x(0.5, 0.25);
  const double phi = -(x.squaredNorm()) / 4.0;
  CHECK(gaussian_curvature(quarter_paraboloid(), x) ==
        doctest::Approx(std::exp(-2.0 * phi)).epsilon(1e-14));
}

TEST_CASE("ricci quadratic form") {
  CHECK(ricci_quadratic(ConformalMetric::flat(), Vec2(0.1, 0.2), Vec2(3.0, -1.0)) == 0.0);
  const ConformalMetric m = quarter_paraboloid();
  CHECK(ricci_quadratic(m, Vec2::Zero(), Vec2(1.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ricci_quadratic(m, Vec2::Zero(), Vec2(2.0, 0.0)) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("geodesic curvature of circles") {
  const DomainSpec spec = Disk{1.0};
  const TriMesh mesh = build_mesh(spec, 0.2);
  const BoundaryGeometry bg = boundary_geometry(spec, mesh);

  for (double H : geodesic_boundary_curvature(ConformalMetric::flat(), bg)) CHECK(H == doctest::Approx(1.0));
  const double c = 0.4;
  for (double H : geodesic_boundary_curvature(ConformalMetric::constant(c), bg))
    CHECK(H == doctest::Approx(std::exp(-c)).epsilon(1e-13));
  for (double H : geodesic_boundary_curvature(quarter_paraboloid(), bg))
    CHECK(std::abs(H - 0.64201) <= 1e-5);

  const DomainSpec big = Disk{2.0};
  const TriMesh mesh2 = build_mesh(big, 0.3);
  for (double H : geodesic_boundary_curvature(ConformalMetric::flat(), boundary_geometry(big, mesh2)))
    CHECK(H == doctest::Approx(0.5));
}

TEST_CASE("derivatives of the exponent agree with finite differences") {
  const std::vector<ConformalMetric> metrics{
      ConformalMetric::poly({0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.1, 0.2, 0.3, -0.1, 0.05, 0.02, -0.03,
                             0.04, 0.01}),
      ConformalMetric::bump(0.5, 0.7, Vec2(0.1, -0.2)), ConformalMetric::constant(-0.3)};
  const Vec2 x(0.37, -0.21);
  for (const auto& m : metrics) {
    double prev_err = 0.0;
    for (double step : {1e-3, 5e-4}) {
      Vec2 fd_grad;
      Mat2 fd_hess;
      for (int i = 0; i < 2; ++i) {
        const Vec2 e = Vec2::Unit(i) * step;
        fd_grad[i] = (m.phi(x + e) - m.phi(x - e)) / (2.0 * step);
        fd_hess.col(i) = (m.grad_phi(x + e) - m.grad_phi(x - e)) / (2.0 * step);
      }
      const double err = (fd_grad - m.grad_phi(x)).norm() + (fd_hess - m.hess_phi(x)).norm();
      CHECK(err <= 1e-5);
      if (prev_err > 1e-12) CHECK(err <= prev_err / 3.0);
      prev_err = err;
    }
  }
}

TEST_CASE("nonnegative Ricci metrics have K >= 0 on random samples") {
  const std::vector<ConformalMetric> metrics{ConformalMetric::flat(), ConformalMetric::constant(1.0),
                                             ConformalMetric::poly({0, 0, 0, -0.125, 0, -0.125}),
                                             ConformalMetric::poly({0.2, 0.1, 0, -0.3, 0.1, -0.2})};
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 10000; ++i) pts.emplace_back(coord(rng), coord(rng));
  for (const auto& m : metrics) {
    REQUIRE(m.nonnegative_ricci());
    CHECK(check_nonnegative_ricci(m, pts));
    double worst = 0.0;
    for (const auto& x : pts) worst = std::min(worst, gaussian_curvature(m, x));
    CHECK(worst >= -1e-12);
  }
}

TEST_CASE("Ricci flag is not inferred for curved exponents") {
  CHECK_FALSE(ConformalMetric::poly({0, 0, 0, 0.25, 0, 0.25}).nonnegative_ricci());
  CHECK_FALSE(ConformalMetric::bump(0.5, 0.5).nonnegative_ricci());
  ConformalMetric m = ConformalMetric::bump(-0.5, 0.5);
  m.declare_nonnegative_ricci(true);
  CHECK(m.nonnegative_ricci());
  CHECK_FALSE(check_nonnegative_ricci(ConformalMetric::poly({0, 0, 0, 0.25, 0, 0.25}),
                                      {Vec2::Zero()}));
}

TEST_CASE("zero polynomial evaluates like the flat metric") {
  const ConformalMetric zero = ConformalMetric::poly({0, 0, 0, 0, 0, 0});
  CHECK_FALSE(zero.is_flat());
  CHECK(ConformalMetric::flat().is_flat());
  const Vec2 x(0.3, 0.8);
  CHECK(zero.phi(x) == 0.0);
  CHECK(zero.grad_phi(x).norm() == 0.0);
  CHECK(zero.hess_phi(x).norm() == 0.0);
  CHECK(zero.scale(x) == 1.0);
  CHECK(gaussian_curvature(zero, x) == 0.0);
}

TEST_CASE("catalogue construction errors") {
  CHECK_THROWS_AS(ConformalMetric::from_kind("hyperbolic", {}), ValidationError);
  CHECK_THROWS_AS(ConformalMetric::from_kind("flat", {1.0}), ValidationError);
  CHECK_THROWS_AS(ConformalMetric::from_kind("constant", {}), ValidationError);
  CHECK_THROWS_AS(ConformalMetric::from_kind("bump", {1.0, -1.0}), ValidationError);
  CHECK_THROWS_AS(ConformalMetric::from_kind("poly", std::vector<double>(16, 0.0)), ValidationError);
  CHECK_THROWS_AS(ConformalMetric::from_kind("constant", {std::nan("")}), ValidationError);
  CHECK(ConformalMetric::from_kind("bump", {1.0, 0.5}).kind() == ConformalMetric::Kind::kBump);
}
