#include "plap/analytic.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "plap/error.hpp"

namespace plap {

namespace {

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

double dpow(double x, int k, int m) {
  if (m > k) return 0.0;
  double c = 1.0;
  for (int i = 0; i < m; ++i) c *= (k - i);
  return c * ipow(x, k - m);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Mat2 nan_mat() { return Mat2::Constant(kNaN); }

}  // namespace

AnalyticField AnalyticField::polynomial(std::vector<Monomial> terms) {
  for (const auto& t : terms)
    if (t.i < 0 || t.j < 0 || t.i + t.j > 4)
      throw ValidationError("AnalyticField: polynomial degree must be <= 4");
  AnalyticField f;
  f.kind_ = Kind::kPolynomial;
  f.terms_ = std::move(terms);
  return f;
}

AnalyticField AnalyticField::radial_power(double c0, double c, double q, Vec2 center) {
  AnalyticField f;
  f.kind_ = Kind::kRadialPower;
  f.c0_ = c0;
  f.c_ = c;
  f.q_ = q;
  f.center_ = center;
  return f;
}

AnalyticField AnalyticField::disk_torsion(double p, double R) {
  const double q = p / (p - 1.0);
  const double C = (p - 1.0) / p * std::pow(2.0, -1.0 / (p - 1.0));
  return radial_power(C * std::pow(R, q), -C, q);
}

Derivs3 AnalyticField::eval(const Vec2& x) const {
  Derivs3 d;
  if (kind_ == Kind::kPolynomial) {
    for (const auto& t : terms_) {
      const double X = x.x(), Y = x.y();
      auto D = [&](int mx, int my) { return t.c * dpow(X, t.i, mx) * dpow(Y, t.j, my); };
      d.value += D(0, 0);
      d.grad += Vec2(D(1, 0), D(0, 1));
      d.hess(0, 0) += D(2, 0);
      d.hess(0, 1) += D(1, 1);
      d.hess(1, 1) += D(0, 2);
      // third[k](i, j) = d_i d_j d_k u
      d.third[0](0, 0) += D(3, 0);
      d.third[0](0, 1) += D(2, 1);
      d.third[0](1, 1) += D(1, 2);
      d.third[1](0, 0) += D(2, 1);
      d.third[1](0, 1) += D(1, 2);
      d.third[1](1, 1) += D(0, 3);
    }
    d.hess(1, 0) = d.hess(0, 1);
    for (auto& t : d.third) t(1, 0) = t(0, 1);
    return d;
  }
  // u = c0 + c r^q around center.
  const Vec2 y = x - center_;
  const double r2 = y.squaredNorm();
  const double r = std::sqrt(r2);
  const double F1 = c_ * q_ * std::pow(r, q_ - 2.0);
  const double F2 = c_ * q_ * (q_ - 2.0) * std::pow(r, q_ - 4.0);
  const double F3 = c_ * q_ * (q_ - 2.0) * (q_ - 4.0) * std::pow(r, q_ - 6.0);
  d.value = c0_ + c_ * std::pow(r, q_);
  d.grad = F1 * y;
  d.hess = F2 * y * y.transpose() + F1 * Mat2::Identity();
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        d.third[k](i, j) = F3 * y(i) * y(j) * y(k) +
                           F2 * ((i == j) * y(k) + (i == k) * y(j) + (j == k) * y(i));
  }
  return d;
}

std::string AnalyticField::describe() const {
  std::ostringstream s;
  if (kind_ == Kind::kPolynomial) {
    s << "poly:";
    for (const auto& t : terms_) s << ' ' << t.c << "*x^" << t.i << "y^" << t.j;
  } else {
    s << "radial: " << c0_ << " + " << c_ << "*|x-(" << center_.x() << "," << center_.y()
      << ")|^" << q_;
  }
  return s.str();
}

std::vector<AnalyticField> analytic_catalogue(unsigned seed) {
  std::vector<AnalyticField> out;
  out.push_back(AnalyticField::polynomial({{4, 0, 1.0 / 12.0}, {0, 2, 0.5}}));
  out.push_back(AnalyticField::polynomial({{2, 0, 0.5}, {0, 2, 0.5}}));
  out.push_back(AnalyticField::polynomial({{1, 0, 1.0}, {1, 1, 0.3}, {0, 3, -0.2}}));
  out.push_back(AnalyticField::polynomial({{0, 0, 1.0}, {2, 0, -0.2}, {0, 2, -0.8}}));
  for (double p : {1.5, 2.0, 3.0, 4.0}) out.push_back(AnalyticField::disk_torsion(p, 1.0));
  out.push_back(AnalyticField::radial_power(0.3, 0.7, 2.5, Vec2(0.1, -0.2)));
  out.push_back(AnalyticField::radial_power(-1.0, 0.4, 3.0, Vec2(-0.3, 0.2)));
  out.push_back(AnalyticField::radial_power(0.0, -1.1, 1.75, Vec2(0.05, 0.05)));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  for (int k = 0; k < 12; ++k) {
    const int degree = 2 + k % 3;
    std::vector<Monomial> terms;
    for (int i = 0; i <= degree; ++i)
      for (int j = 0; i + j <= degree; ++j) terms.push_back({i, j, coeff(rng)});
    out.push_back(AnalyticField::polynomial(std::move(terms)));
  }
  return out;
}

namespace {

template <class T>
using V2 = Eigen::Matrix<T, 2, 1>;
template <class T>
using M2 = Eigen::Matrix<T, 2, 2>;

template <class T>
pointwise::Derivs<2, T> frame_derivs_t(const BasicFieldJets<T>& j) {
  const T e1 = std::exp(-j.phi.v);
  const V2<T>& grad = j.u.g;
  const V2<T>& dphi = j.phi.g;
  pointwise::Derivs<2, T> d;
  d.g = e1 * grad;
  d.H = (e1 * e1) * (j.u.H - dphi * grad.transpose() - grad * dphi.transpose() +
                     dphi.dot(grad) * M2<T>::Identity());
  // Gaussian curvature -e^{-2 phi} lap(phi) times |grad u|_g^2.
  d.ric = -(e1 * e1) * j.phi.H.trace() * d.g.squaredNorm();
  return d;
}

template <class T>
std::pair<V2<T>, M2<T>> frame_scalar_t(const BasicFieldJets<T>& j, const BasicJet<T>& f) {
  const T e1 = std::exp(-j.phi.v);
  const V2<T>& dphi = j.phi.g;
  return {e1 * f.g, (e1 * e1) * (f.H - dphi * f.g.transpose() - f.g * dphi.transpose() +
                                 dphi.dot(f.g) * M2<T>::Identity())};
}

template <class T>
BasicFieldJets<T> field_jets_t(const AnalyticField& u, const ConformalMetric& metric,
                               const Vec2& x) {
  const FieldJets d = field_jets(u, metric, x);
  BasicFieldJets<T> j;
  j.u = jet_cast<T>(d.u);
  j.phi = jet_cast<T>(d.phi);
  for (int k = 0; k < 2; ++k) {
    j.du[k] = jet_cast<T>(d.du[k]);
    j.dphi[k] = jet_cast<T>(d.dphi[k]);
  }
  for (int m = 0; m < 3; ++m) j.d2u[m] = jet_cast<T>(d.d2u[m]);
  return j;
}

template <class T>
BasicJet<T> grad_norm_sq_t(const BasicFieldJets<T>& j) {
  return exp(j.phi * -2.0) * (j.du[0] * j.du[0] + j.du[1] * j.du[1]);
}

template <class T>
BasicJet<T> p_laplacian_t(const BasicFieldJets<T>& j, double p) {
  const BasicJet<T> e1 = exp(-j.phi);
  const BasicJet<T> e2 = e1 * e1;
  const std::array<BasicJet<T>, 2> G = {e1 * j.du[0], e1 * j.du[1]};
  const BasicJet<T> dphi_du = j.dphi[0] * j.du[0] + j.dphi[1] * j.du[1];
  BasicJet<T> M[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      BasicJet<T> m = j.d2u[a + b] - j.dphi[a] * j.du[b] - j.dphi[b] * j.du[a];
      if (a == b) m = m + dphi_du;
      M[a][b] = e2 * m;
    }
  const BasicJet<T> s = G[0] * G[0] + G[1] * G[1];
  const BasicJet<T> GMG =
      G[0] * M[0][0] * G[0] + 2.0 * (G[0] * M[0][1] * G[1]) + G[1] * M[1][1] * G[1];
  const BasicJet<T> trace = M[0][0] + M[1][1];
  return pow(s, 0.5 * (p - 2.0)) * (trace + (p - 2.0) * (GMG / s));
}

template <class T>
BasicJet<T> p_function_t(const BasicFieldJets<T>& j, double p, double n) {
  return (p - 1.0) / p * pow(grad_norm_sq_t(j), 0.5 * p) + j.u * (1.0 / n);
}

template <class T>
T grad_dpu_dot_t(const BasicFieldJets<T>& j, double p) {
  return std::exp(-2 * j.phi.v) * p_laplacian_t(j, p).g.dot(j.u.g);
}

}  // namespace

pointwise::Derivs<2> frame_derivs(const ConformalMetric& metric, const Vec2& x, const Vec2& grad,
                                  const Mat2& hess) {
  const double phi = metric.phi(x);
  const Vec2 dphi = metric.grad_phi(x);
  const double e1 = std::exp(-phi);
  pointwise::Derivs<2> d;
  d.g = e1 * grad;
  d.H = (e1 * e1) * (hess - dphi * grad.transpose() - grad * dphi.transpose() +
                     dphi.dot(grad) * Mat2::Identity());
  d.ric = gaussian_curvature(metric, x) * d.g.squaredNorm();
  return d;
}

FrameScalar frame_scalar(const ConformalMetric& metric, const Vec2& x, const Jet& f) {
  const double phi = metric.phi(x);
  const Vec2 dphi = metric.grad_phi(x);
  const double e1 = std::exp(-phi);
  return {e1 * f.g, (e1 * e1) * (f.H - dphi * f.g.transpose() - f.g * dphi.transpose() +
                                 dphi.dot(f.g) * Mat2::Identity())};
}

FieldJets field_jets(const AnalyticField& u, const ConformalMetric& metric, const Vec2& x) {
  const Derivs3 d = u.eval(x);
  FieldJets j;
  j.u = {d.value, d.grad, d.hess};
  for (int k = 0; k < 2; ++k) j.du[k] = {d.grad(k), d.hess.row(k).transpose(), d.third[k]};
  const Mat2 hphi = metric.hess_phi(x);
  j.phi = {metric.phi(x), metric.grad_phi(x), hphi};
  for (int k = 0; k < 2; ++k) j.dphi[k] = {j.phi.g(k), hphi.row(k).transpose(), nan_mat()};
  const int idx[3][2] = {{0, 0}, {0, 1}, {1, 1}};
  for (int m = 0; m < 3; ++m) {
    const int a = idx[m][0], b = idx[m][1];
    j.d2u[m] = {d.hess(a, b), Vec2(d.third[0](a, b), d.third[1](a, b)), nan_mat()};
  }
  return j;
}

Jet grad_norm_sq_jet(const FieldJets& j) { return grad_norm_sq_t(j); }

Jet p_laplacian_jet(const FieldJets& j, double p) { return p_laplacian_t(j, p); }

Jet p_function_jet(const FieldJets& j, double p, double n) { return p_function_t(j, p, n); }

double grad_dpu_dot_grad_u(const AnalyticField& u, const ConformalMetric& metric, const Vec2& x,
                           double p) {
  return grad_dpu_dot_t(field_jets(u, metric, x), p);
}

// The two checks below evaluate in long double: with |grad u| near 5 and p = 4 their terms
// reach 1e6, where double round-off alone approaches the 1e-10 comparison scale.

std::optional<double> p_bochner_residual(const AnalyticField& u, const ConformalMetric& metric,
                                         double p, const Vec2& x) {
  using T = long double;
  const auto j = field_jets_t<T>(u, metric, x);
  if (j.u.g.norm() == 0) return std::nullopt;
  const auto d = frame_derivs_t(j);
  const auto f = frame_scalar_t(j, pow(grad_norm_sq_t(j), 0.5 * p));
  const T lhs = pointwise::linearized_second_order<2, T>(d.g, f.second, p) / T(p);
  return static_cast<double>(lhs - pointwise::bochner_rhs(d, p, grad_dpu_dot_t(j, p)));
}

std::optional<LuPCrossCheck> luP_cross_check(const AnalyticField& u,
                                             const ConformalMetric& metric, double p, double n,
                                             const Vec2& x) {
  using T = long double;
  const auto j = field_jets_t<T>(u, metric, x);
  if (j.u.g.norm() == 0) return std::nullopt;
  const auto d = frame_derivs_t(j);
  const auto P = frame_scalar_t(j, p_function_t(j, p, n));
  const T via_linearized = pointwise::linearized_apply<2, T>(d, P.first, P.second, p);
  const T via_expansion = pointwise::luP_expansion(d, p, n, grad_dpu_dot_t(j, p));
  return LuPCrossCheck{static_cast<double>(via_linearized), static_cast<double>(via_expansion),
                       static_cast<double>(via_linearized - via_expansion)};
}

}  // namespace plap
