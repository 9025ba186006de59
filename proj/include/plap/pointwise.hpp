#pragma once

// Pointwise differential algebra of the p-Laplacian at a non-critical point.
//
// Every function takes derivatives expressed in an orthonormal frame: gradient g,
// symmetric Hessian H, and Ric(grad u, grad u). Euclidean data is already in that form;
// conformal data is converted by frame_derivs() in analytic.hpp. The templates are
// dimension-generic so radial oracles in n >= 3 share the same code.

#include <cmath>

#include <Eigen/Core>

namespace plap::pointwise {

template <int N, class T = double>
using Vec = Eigen::Matrix<T, N, 1>;
template <int N, class T = double>
using Mat = Eigen::Matrix<T, N, N>;

template <int N, class T = double>
struct Derivs {
  Vec<N, T> g;
  Mat<N, T> H;
  T ric = 0;
};

template <class V>
typename V::Scalar grad_norm(const V& g) {
  return g.norm();
}

/// A_u = H(g, g) / |g|^2.
template <class V, class M>
typename V::Scalar a_u(const V& g, const M& H) {
  return g.dot(H * g) / g.squaredNorm();
}

/// |grad |grad u||^2 = |H g|^2 / |g|^2.
template <class V, class M>
typename V::Scalar grad_grad_norm_sq(const V& g, const M& H) {
  return (H * g).squaredNorm() / g.squaredNorm();
}

/// Delta_p u = |g|^{p-2} (tr H + (p-2) A_u).
template <class V, class M>
typename V::Scalar p_laplacian(const V& g, const M& H, double p_) {
  using T = typename V::Scalar;
  const T p = p_;
  return std::pow(g.norm(), p - 2) * (H.trace() + (p - 2) * a_u(g, H));
}

/// Linearized p-Laplacian applied to eta, expanded form:
///   |g|^{p-2} lap(eta) + (p-2)|g|^{p-4} Hess(eta)(g, g) + (p-2) <g, d eta>/|g|^2 Delta_p u
///   + 2(p-2)|g|^{p-4} H(g, d eta - g/|g| <g/|g|, d eta>).
template <int N, class T>
T linearized_apply(const Derivs<N, T>& u, const Vec<N, T>& eta_g, const Mat<N, T>& eta_H,
                   double p_) {
  const T p = p_;
  const T s = u.g.norm();
  const T dpu = p_laplacian(u.g, u.H, p_);
  const Vec<N, T> e = u.g / s;
  const Vec<N, T> tangential = eta_g - e * e.dot(eta_g);
  return std::pow(s, p - 2) * eta_H.trace() + (p - 2) * std::pow(s, p - 4) * u.g.dot(eta_H * u.g) +
         (p - 2) * u.g.dot(eta_g) / (s * s) * dpu +
         2 * (p - 2) * std::pow(s, p - 4) * u.g.dot(u.H * tangential);
}

/// Second-order part: sum_ij (|g|^{p-2} delta_ij + (p-2)|g|^{p-4} g_i g_j) eta_ij.
template <int N, class T>
T linearized_second_order(const Vec<N, T>& g, const Mat<N, T>& eta_H, double p_) {
  const T p = p_;
  const T s = g.norm();
  return std::pow(s, p - 2) * eta_H.trace() + (p - 2) * std::pow(s, p - 4) * g.dot(eta_H * g);
}

/// L_u P expanded for an arbitrary C^3 field:
///   (p-1)|g|^{2(p-2)} (|g|^{2-p} <grad Delta_p u, g> + ||H||^2 + (p-2)^2 A^2 + Ric)
///   + 2(p-1)(p-2)|g|^{2(p-2)} |grad|grad u||^2 + (p-1) Delta_p u / n.
template <int N, class T>
T luP_expansion(const Derivs<N, T>& u, double p_, double n, T grad_dpu_dot_g) {
  const T p = p_;
  const T s = u.g.norm();
  const T w = std::pow(s, 2 * (p - 2));
  const T A = a_u(u.g, u.H);
  const T dpu = p_laplacian(u.g, u.H, p_);
  return (p - 1) * w *
             (std::pow(s, 2 - p) * grad_dpu_dot_g + u.H.squaredNorm() + (p - 2) * (p - 2) * A * A +
              u.ric) +
         2 * (p - 1) * (p - 2) * w * grad_grad_norm_sq(u.g, u.H) + (p - 1) * dpu / T(n);
}

/// L_u P for a torsion solution (Delta_p u = -1, so the source gradient term drops).
template <int N, class T>
T luP_torsion(const Derivs<N, T>& u, double p_, double n) {
  const T p = p_;
  const T s = u.g.norm();
  const T w = std::pow(s, 2 * (p - 2));
  const T A = a_u(u.g, u.H);
  return (p - 1) * w * (u.H.squaredNorm() + (p - 2) * (p - 2) * A * A + u.ric) +
         2 * (p - 1) * (p - 2) * w * grad_grad_norm_sq(u.g, u.H) - (p - 1) / T(n);
}

/// Right-hand side of the p-Bochner formula.
template <int N, class T>
T bochner_rhs(const Derivs<N, T>& u, double p_, T grad_dpu_dot_g) {
  const T p = p_;
  const T s = u.g.norm();
  const T A = a_u(u.g, u.H);
  const T dpu = p_laplacian(u.g, u.H, p_);
  return std::pow(s, 2 * (p - 2)) *
         (std::pow(s, 2 - p) * (grad_dpu_dot_g - (p - 2) * A * dpu) + u.H.squaredNorm() +
          p * (p - 2) * A * A + u.ric);
}

/// a = (p-2)|g|^{p-4} <g, grad P> g + |g|^{p-2} grad P.
template <int N, class T>
Vec<N, T> flux_vector(const Vec<N, T>& g, const Vec<N, T>& grad_P, double p_) {
  const T p = p_;
  const T s = g.norm();
  return (p - 2) * std::pow(s, p - 4) * g.dot(grad_P) * g + std::pow(s, p - 2) * grad_P;
}

}  // namespace plap::pointwise
