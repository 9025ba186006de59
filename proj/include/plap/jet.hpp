#pragma once

#include <cmath>

#include "plap/geometry.hpp"

namespace plap {

/// Second-order forward-mode jet in two variables: value, gradient and Hessian of a
/// scalar expression. Used only to build exact-derivative oracles from closed-form
/// ingredients; the Hessian slot may hold NaN when the ingredient's second
/// derivatives are not available (the gradient never depends on it).
template <class T>
struct BasicJet {
  using V = Eigen::Matrix<T, 2, 1>;
  using M = Eigen::Matrix<T, 2, 2>;
  T v = 0;
  V g = V::Zero();
  M H = M::Zero();

  static BasicJet constant(T c) { return {c, V::Zero(), M::Zero()}; }
};

using Jet = BasicJet<double>;
/// Extended precision, for the analytic cross-checks whose terms reach 1e6.
using JetL = BasicJet<long double>;

template <class T>
BasicJet<T> operator+(const BasicJet<T>& a, const BasicJet<T>& b) {
  return {a.v + b.v, a.g + b.g, a.H + b.H};
}
template <class T>
BasicJet<T> operator-(const BasicJet<T>& a, const BasicJet<T>& b) {
  return {a.v - b.v, a.g - b.g, a.H - b.H};
}
template <class T>
BasicJet<T> operator-(const BasicJet<T>& a) {
  return {-a.v, -a.g, -a.H};
}
template <class T>
BasicJet<T> operator+(const BasicJet<T>& a, double c) {
  return {a.v + T(c), a.g, a.H};
}
template <class T>
BasicJet<T> operator+(double c, const BasicJet<T>& a) {
  return a + c;
}
template <class T>
BasicJet<T> operator-(const BasicJet<T>& a, double c) {
  return {a.v - T(c), a.g, a.H};
}
template <class T>
BasicJet<T> operator*(const BasicJet<T>& a, double c) {
  const T k = c;
  return {a.v * k, a.g * k, a.H * k};
}
template <class T>
BasicJet<T> operator*(double c, const BasicJet<T>& a) {
  return a * c;
}
template <class T>
BasicJet<T> operator/(const BasicJet<T>& a, double c) {
  const T k = T(1) / T(c);
  return {a.v * k, a.g * k, a.H * k};
}

template <class T>
BasicJet<T> operator*(const BasicJet<T>& a, const BasicJet<T>& b) {
  return {a.v * b.v, a.v * b.g + b.v * a.g,
          a.v * b.H + b.v * a.H + a.g * b.g.transpose() + b.g * a.g.transpose()};
}

/// f(a) given f(a.v), f'(a.v), f''(a.v).
template <class T>
BasicJet<T> chain(const BasicJet<T>& a, T f0, T f1, T f2) {
  return {f0, f1 * a.g, f1 * a.H + f2 * a.g * a.g.transpose()};
}

template <class T>
BasicJet<T> exp(const BasicJet<T>& a) {
  const T e = std::exp(a.v);
  return chain(a, e, e, e);
}

template <class T>
BasicJet<T> pow(const BasicJet<T>& a, double k_) {
  const T k = k_;
  return chain(a, std::pow(a.v, k), k * std::pow(a.v, k - 1), k * (k - 1) * std::pow(a.v, k - 2));
}

template <class T>
BasicJet<T> inverse(const BasicJet<T>& a) {
  return chain(a, T(1) / a.v, T(-1) / (a.v * a.v), T(2) / (a.v * a.v * a.v));
}

template <class T>
BasicJet<T> operator/(const BasicJet<T>& a, const BasicJet<T>& b) {
  return a * inverse(b);
}

template <class T, class U>
BasicJet<T> jet_cast(const BasicJet<U>& a) {
  return {T(a.v), a.g.template cast<T>(), a.H.template cast<T>()};
}

}  // namespace plap
