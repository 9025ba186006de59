#pragma once

#include <string>
#include <vector>

#include "plap/geometry.hpp"

namespace plap {

/// Conformally flat metric g = exp(2 phi) * delta on a planar domain.
///
/// The exponent phi comes from a fixed catalogue with closed-form first and second
/// derivatives:
///   flat      phi = 0
///   constant  phi = c                                   params [c]
///   poly      phi = sum c_k x^i y^j, total degree <= 4   params in the order
///             1, x, y, x^2, xy, y^2, x^3, x^2y, xy^2, y^3, x^4, x^3y, x^2y^2, xy^3, y^4
///   bump      phi = A exp(-|x - c|^2 / (2 s^2))         params [A, s, cx = 0, cy = 0]
class ConformalMetric {
 public:
  enum class Kind { kFlat, kConstant, kPoly, kBump };

  ConformalMetric() = default;
  static ConformalMetric flat();
  static ConformalMetric constant(double c);
  static ConformalMetric poly(std::vector<double> coeffs);
  static ConformalMetric bump(double amplitude, double width, Vec2 center = Vec2::Zero());
  /// Throws ValidationError on unknown kinds or malformed params.
  static ConformalMetric from_kind(const std::string& kind, const std::vector<double>& params);

  Kind kind() const { return kind_; }
  std::string kind_name() const;
  const std::vector<double>& params() const { return params_; }

  /// True only for the `flat` catalogue entry; a zero polynomial is not flagged.
  bool is_flat() const { return kind_ == Kind::kFlat; }

  /// Declared Ric >= 0. Automatically true when Delta phi <= 0 holds identically
  /// (flat, constant, polynomials of degree <= 2 with nonpositive Laplacian).
  bool nonnegative_ricci() const { return declared_nonneg_ricci_ || provably_nonneg_ricci(); }
  void declare_nonnegative_ricci(bool v) { declared_nonneg_ricci_ = v; }

  double phi(const Vec2& x) const;
  Vec2 grad_phi(const Vec2& x) const;
  Mat2 hess_phi(const Vec2& x) const;
  double laplacian_phi(const Vec2& x) const { return hess_phi(x).trace(); }

  /// exp(phi): length scale factor.
  double scale(const Vec2& x) const;

 private:
  Kind kind_ = Kind::kFlat;
  std::vector<double> params_;
  bool declared_nonneg_ricci_ = false;

  bool provably_nonneg_ricci() const;
};

/// K = -exp(-2 phi) Delta phi.
double gaussian_curvature(const ConformalMetric& metric, const Vec2& x);

/// Ric(v, v) = K |v|_g^2 = K exp(2 phi) |v|^2 for a coordinate vector v.
double ricci_quadratic(const ConformalMetric& metric, const Vec2& x, const Vec2& v);

/// H_g = exp(-phi) (H + d phi / d nu) per boundary node.
std::vector<double> geodesic_boundary_curvature(const ConformalMetric& metric,
                                                const BoundaryGeometry& bg);

/// True when Delta phi <= tol at every point.
bool check_nonnegative_ricci(const ConformalMetric& metric, const std::vector<Vec2>& points,
                             double tol = 1e-12);

}  // namespace plap
