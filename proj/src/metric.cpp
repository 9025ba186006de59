#include "plap/metric.hpp"

#include <cmath>

#include "plap/error.hpp"

namespace plap {

namespace {

// Exponents (i, j) of the poly catalogue, graded by total degree.
constexpr int kPolyTerms = 15;
constexpr int kPolyExp[kPolyTerms][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1},
                                         {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3},
                                         {4, 0}, {3, 1}, {2, 2}, {1, 3}, {0, 4}};

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// d^m/dx^m x^k
double dpow(double x, int k, int m) {
  if (m > k) return 0.0;
  double c = 1.0;
  for (int i = 0; i < m; ++i) c *= (k - i);
  return c * ipow(x, k - m);
}

}  // namespace

ConformalMetric ConformalMetric::flat() { return {}; }

ConformalMetric ConformalMetric::constant(double c) {
  ConformalMetric m;
  m.kind_ = Kind::kConstant;
  m.params_ = {c};
  return m;
}

ConformalMetric ConformalMetric::poly(std::vector<double> coeffs) {
  if (coeffs.size() > kPolyTerms)
    throw ValidationError("metric.poly: at most 15 coefficients (degree <= 4)");
  ConformalMetric m;
  m.kind_ = Kind::kPoly;
  m.params_ = std::move(coeffs);
  return m;
}

ConformalMetric ConformalMetric::bump(double amplitude, double width, Vec2 center) {
  if (!(width > 0.0)) throw ValidationError("metric.bump: width must be positive");
  ConformalMetric m;
  m.kind_ = Kind::kBump;
  m.params_ = {amplitude, width, center.x(), center.y()};
  return m;
}

ConformalMetric ConformalMetric::from_kind(const std::string& kind,
                                           const std::vector<double>& params) {
  for (double v : params)
    if (!std::isfinite(v)) throw ValidationError("metric: params must be finite");
  if (kind == "flat") {
    if (!params.empty()) throw ValidationError("metric.flat takes no params");
    return flat();
  }
  if (kind == "constant") {
    if (params.size() != 1) throw ValidationError("metric.constant takes exactly one param");
    return constant(params[0]);
  }
  if (kind == "poly") return poly(params);
  if (kind == "bump") {
    if (params.size() != 2 && params.size() != 4)
      throw ValidationError("metric.bump takes [A, s] or [A, s, cx, cy]");
    const Vec2 c = params.size() == 4 ? Vec2(params[2], params[3]) : Vec2::Zero();
    return bump(params[0], params[1], c);
  }
  throw ValidationError("metric: unknown kind '" + kind + "'");
}

std::string ConformalMetric::kind_name() const {
  switch (kind_) {
    case Kind::kFlat: return "flat";
    case Kind::kConstant: return "constant";
    case Kind::kPoly: return "poly";
    case Kind::kBump: return "bump";
  }
  return "flat";
}

bool ConformalMetric::provably_nonneg_ricci() const {
  switch (kind_) {
    case Kind::kFlat:
    case Kind::kConstant:
      return true;
    case Kind::kPoly: {
      for (std::size_t k = 6; k < params_.size(); ++k)
        if (params_[k] != 0.0) return false;
      const double c20 = params_.size() > 3 ? params_[3] : 0.0;
      const double c02 = params_.size() > 5 ? params_[5] : 0.0;
      return 2.0 * (c20 + c02) <= 0.0;
    }
    case Kind::kBump:
      return params_[0] == 0.0;
  }
  return false;
}

double ConformalMetric::phi(const Vec2& x) const {
  switch (kind_) {
    case Kind::kFlat: return 0.0;
    case Kind::kConstant: return params_[0];
    case Kind::kPoly: {
      double v = 0.0;
      for (std::size_t k = 0; k < params_.size(); ++k)
        v += params_[k] * ipow(x.x(), kPolyExp[k][0]) * ipow(x.y(), kPolyExp[k][1]);
      return v;
    }
    case Kind::kBump: {
      const Vec2 d = x - Vec2(params_[2], params_[3]);
      const double s = params_[1];
      return params_[0] * std::exp(-d.squaredNorm() / (2.0 * s * s));
    }
  }
  return 0.0;
}

Vec2 ConformalMetric::grad_phi(const Vec2& x) const {
  switch (kind_) {
    case Kind::kFlat:
    case Kind::kConstant:
      return Vec2::Zero();
    case Kind::kPoly: {
      Vec2 g = Vec2::Zero();
      for (std::size_t k = 0; k < params_.size(); ++k) {
        const int i = kPolyExp[k][0], j = kPolyExp[k][1];
        g.x() += params_[k] * dpow(x.x(), i, 1) * ipow(x.y(), j);
        g.y() += params_[k] * ipow(x.x(), i) * dpow(x.y(), j, 1);
      }
      return g;
    }
    case Kind::kBump: {
      const Vec2 d = x - Vec2(params_[2], params_[3]);
      const double s2 = params_[1] * params_[1];
      return -phi(x) / s2 * d;
    }
  }
  return Vec2::Zero();
}

Mat2 ConformalMetric::hess_phi(const Vec2& x) const {
  switch (kind_) {
    case Kind::kFlat:
    case Kind::kConstant:
      return Mat2::Zero();
    case Kind::kPoly: {
      Mat2 h = Mat2::Zero();
      for (std::size_t k = 0; k < params_.size(); ++k) {
        const int i = kPolyExp[k][0], j = kPolyExp[k][1];
        h(0, 0) += params_[k] * dpow(x.x(), i, 2) * ipow(x.y(), j);
        h(0, 1) += params_[k] * dpow(x.x(), i, 1) * dpow(x.y(), j, 1);
        h(1, 1) += params_[k] * ipow(x.x(), i) * dpow(x.y(), j, 2);
      }
      h(1, 0) = h(0, 1);
      return h;
    }
    case Kind::kBump: {
      const Vec2 d = x - Vec2(params_[2], params_[3]);
      const double s2 = params_[1] * params_[1];
      return phi(x) / s2 * (d * d.transpose() / s2 - Mat2::Identity());
    }
  }
  return Mat2::Zero();
}

double ConformalMetric::scale(const Vec2& x) const { return std::exp(phi(x)); }

double gaussian_curvature(const ConformalMetric& metric, const Vec2& x) {
  return -std::exp(-2.0 * metric.phi(x)) * metric.laplacian_phi(x);
}

double ricci_quadratic(const ConformalMetric& metric, const Vec2& x, const Vec2& v) {
  return gaussian_curvature(metric, x) * std::exp(2.0 * metric.phi(x)) * v.squaredNorm();
}

std::vector<double> geodesic_boundary_curvature(const ConformalMetric& metric,
                                                const BoundaryGeometry& bg) {
  std::vector<double> out;
  out.reserve(bg.nodes.size());
  for (const auto& node : bg.nodes) {
    const double dphi_dnu = metric.grad_phi(node.x).dot(node.normal);
    out.push_back(std::exp(-metric.phi(node.x)) * (node.H + dphi_dnu));
  }
  return out;
}

bool check_nonnegative_ricci(const ConformalMetric& metric, const std::vector<Vec2>& points,
                             double tol) {
  for (const auto& x : points)
    if (metric.laplacian_phi(x) > tol) return false;
  return true;
}

}  // namespace plap
