#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "plap/geometry.hpp"
#include "plap/jet.hpp"
#include "plap/metric.hpp"
#include "plap/pointwise.hpp"

namespace plap {

/// Value and Euclidean derivatives through order three; third[k](i, j) = d_i d_j d_k u.
struct Derivs3 {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  std::array<Mat2, 2> third{Mat2::Zero(), Mat2::Zero()};
};

struct Monomial {
  int i = 0;  // power of x
  int j = 0;  // power of y
  double c = 0.0;
};

/// Closed-form test field with exact derivatives: polynomials of degree <= 4 or
/// radial powers c0 + c |x - center|^q.
class AnalyticField {
 public:
  static AnalyticField polynomial(std::vector<Monomial> terms);
  static AnalyticField radial_power(double c0, double c, double q, Vec2 center = Vec2::Zero());
  /// Exact torsion function of the 2-D ball of radius R.
  static AnalyticField disk_torsion(double p, double R);

  Derivs3 eval(const Vec2& x) const;
  double value(const Vec2& x) const { return eval(x).value; }
  std::string describe() const;

 private:
  enum class Kind { kPolynomial, kRadialPower } kind_ = Kind::kPolynomial;
  std::vector<Monomial> terms_;
  double c0_ = 0.0, c_ = 0.0, q_ = 2.0;
  Vec2 center_ = Vec2::Zero();
};

/// Catalogue of at least 20 seeded fields (polynomials and radial powers).
std::vector<AnalyticField> analytic_catalogue(unsigned seed = 7);

/// Orthonormal-frame gradient, covariant Hessian and Ric(grad u, grad u) at x.
pointwise::Derivs<2> frame_derivs(const ConformalMetric& metric, const Vec2& x, const Vec2& grad,
                                  const Mat2& hess);

/// Frame gradient and covariant Hessian of a scalar jet.
struct FrameScalar {
  Vec2 grad;
  Mat2 hess;
};
FrameScalar frame_scalar(const ConformalMetric& metric, const Vec2& x, const Jet& f);

/// Jets of the building blocks at x; Hessian slots of second-derivative quantities are NaN.
template <class T>
struct BasicFieldJets {
  BasicJet<T> u;
  std::array<BasicJet<T>, 2> du;    // partial derivatives u_x, u_y
  BasicJet<T> phi;
  std::array<BasicJet<T>, 2> dphi;  // phi_x, phi_y (Hessian slot NaN)
  std::array<BasicJet<T>, 3> d2u;   // u_xx, u_xy, u_yy (Hessian slot NaN)
};
using FieldJets = BasicFieldJets<double>;
FieldJets field_jets(const AnalyticField& u, const ConformalMetric& metric, const Vec2& x);

/// |grad u|_g^2 as a jet (full Hessian available).
Jet grad_norm_sq_jet(const FieldJets& j);
/// Riemannian Delta_p u as a jet (gradient valid, Hessian slot NaN).
Jet p_laplacian_jet(const FieldJets& j, double p);
/// P = ((p-1)/p)|grad u|_g^p + u/n as a jet.
Jet p_function_jet(const FieldJets& j, double p, double n);

/// <grad Delta_p u, grad u>_g from exact third derivatives.
double grad_dpu_dot_grad_u(const AnalyticField& u, const ConformalMetric& metric, const Vec2& x,
                           double p);

/// (1/p) L^II_u(|grad u|^p) - [p-Bochner right-hand side]; nullopt at a critical point.
std::optional<double> p_bochner_residual(const AnalyticField& u, const ConformalMetric& metric,
                                         double p, const Vec2& x);

struct LuPCrossCheck {
  double via_linearized = 0.0;  // linearized operator applied to P
  double via_expansion = 0.0;   // closed-form expansion including the source-gradient term
  double difference = 0.0;      // via_linearized - via_expansion, formed before rounding
};
std::optional<LuPCrossCheck> luP_cross_check(const AnalyticField& u,
                                             const ConformalMetric& metric, double p, double n,
                                             const Vec2& x);

}  // namespace plap
