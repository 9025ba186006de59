#include "plap/oracles.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "plap/error.hpp"

namespace plap {

namespace {

void check_radial_args(int n, double p, double R) {
  if (n < 2) throw ValidationError("radial profile: n must be >= 2");
  if (!(p > 1.0)) throw ValidationError("radial profile: p must be > 1");
  if (!(R > 0.0)) throw ValidationError("radial profile: R must be > 0");
}

// Linear interpolation of grid data g_i at r = i dr.
double lerp_grid(const std::vector<double>& g, double dr, double r) {
  const double s = std::clamp(r / dr, 0.0, static_cast<double>(g.size() - 1));
  const auto i = std::min(static_cast<std::size_t>(s), g.size() - 2);
  const double f = s - static_cast<double>(i);
  return (1.0 - f) * g[i] + f * g[i + 1];
}

}  // namespace

RadialProfile RadialProfile::exact(int n, double p, double R) {
  check_radial_args(n, p, R);
  RadialProfile prof;
  prof.n_ = n;
  prof.p_ = p;
  prof.R_ = R;
  return prof;
}

RadialProfile RadialProfile::tabulated(int n, double p, double R, std::vector<double> values) {
  check_radial_args(n, p, R);
  if (values.size() < 3) throw ValidationError("tabulated radial profile needs >= 3 values");
  RadialProfile prof;
  prof.n_ = n;
  prof.p_ = p;
  prof.R_ = R;
  prof.dr_ = R / static_cast<double>(values.size() - 1);
  prof.values_ = std::move(values);
  return prof;
}

double RadialProfile::u(double r) const {
  if (!is_exact()) return lerp_grid(values_, dr_, r);
  const double q = p_ / (p_ - 1.0);
  const double C = (p_ - 1.0) / p_ * std::pow(static_cast<double>(n_), -1.0 / (p_ - 1.0));
  return C * (std::pow(R_, q) - std::pow(r, q));
}

double RadialProfile::du(double r) const {
  if (is_exact()) return -std::pow(r / n_, 1.0 / (p_ - 1.0));
  const std::size_t N = values_.size() - 1;
  std::vector<double> d(N + 1);
  d[0] = (-3.0 * values_[0] + 4.0 * values_[1] - values_[2]) / (2.0 * dr_);
  for (std::size_t i = 1; i < N; ++i) d[i] = (values_[i + 1] - values_[i - 1]) / (2.0 * dr_);
  d[N] = boundary_slope();
  return lerp_grid(d, dr_, r);
}

double RadialProfile::d2u(double r) const {
  if (is_exact()) {
    const double k = 1.0 / (p_ - 1.0);
    return -k * std::pow(1.0 / n_, k) * std::pow(r, k - 1.0);
  }
  const std::size_t N = values_.size() - 1;
  std::vector<double> d(N + 1);
  for (std::size_t i = 1; i < N; ++i)
    d[i] = (values_[i + 1] - 2.0 * values_[i] + values_[i - 1]) / (dr_ * dr_);
  d[0] = d[1];
  d[N] = d[N - 1];
  return lerp_grid(d, dr_, r);
}

double RadialProfile::ode_residual(double r) const {
  const double d1 = du(r), d2 = d2u(r);
  const double w = std::pow(std::abs(d1), p_ - 2.0);
  return -((n_ - 1.0) / r * w * d1 + (p_ - 1.0) * w * d2) - 1.0;
}

double RadialProfile::boundary_slope() const {
  if (is_exact()) return du(R_);
  const std::size_t N = values_.size() - 1;
  return (3.0 * values_[N] - 4.0 * values_[N - 1] + values_[N - 2]) / (2.0 * dr_);
}

RadialProfile radial_exact(int n, double p, double R) { return RadialProfile::exact(n, p, R); }

double p_ball_constant(int n, double p, double R) {
  check_radial_args(n, p, R > 0.0 ? R : 1.0);
  if (R <= 0.0) return 0.0;
  return (p - 1.0) / p * std::pow(static_cast<double>(n), -p / (p - 1.0)) *
         std::pow(R, p / (p - 1.0));
}

EllipseIntegrals ellipse_boundary_integrals(double a, double b) {
  if (!(b > 0.0) || a < b) throw ValidationError("ellipse integrals require a >= b > 0");
  using boost::math::quadrature::gauss_kronrod;
  const double two_pi = 2.0 * std::numbers::pi;
  auto speed = [&](double t) {
    const double s = std::sin(t), c = std::cos(t);
    return std::sqrt(a * a * s * s + b * b * c * c);
  };
  auto inv_curv_speed = [&](double t) {
    const double v = speed(t);
    return v * v * v / (a * b) * v;  // (1/kappa) * |gamma'|
  };
  EllipseIntegrals out;
  out.area = std::numbers::pi * a * b;
  out.perimeter = gauss_kronrod<double, 61>::integrate(speed, 0.0, two_pi, 15, 1e-15);
  out.inv_H_integral = gauss_kronrod<double, 61>::integrate(inv_curv_speed, 0.0, two_pi, 15, 1e-15);
  out.H0 = out.perimeter / (2.0 * out.area);
  out.max_H = a / (b * b);
  out.min_H = b / (a * a);
  return out;
}

namespace {

struct Parts {
  long double norm_sq_H = 0, A = 0, grad_grad_sq = 0, trace = 0, s = 0;
};

Parts parts_of(int n, const SymMat& H, const SmallVec& g) {
  if (H.rows() != n || H.cols() != n || g.size() != n)
    throw ValidationError("matrix inequality: dimension mismatch");
  if (n < 2 || n > 6) throw ValidationError("matrix inequality: n must be in [2, 6]");
  Parts out;
  long double gg = 0;
  for (int i = 0; i < n; ++i) gg += static_cast<long double>(g[i]) * g[i];
  if (!(gg > 0)) throw PreconditionError("matrix inequality: gradient must be nonzero");
  long double gHg = 0, Hg_sq = 0;
  for (int i = 0; i < n; ++i) {
    long double hg = 0;
    for (int j = 0; j < n; ++j) {
      const long double hij = 0.5L * (static_cast<long double>(H(i, j)) + H(j, i));
      hg += hij * g[j];
      out.norm_sq_H += hij * hij;
    }
    gHg += hg * g[i];
    Hg_sq += hg * hg;
    out.trace += H(i, i);
  }
  out.A = gHg / gg;
  out.grad_grad_sq = Hg_sq / gg;
  out.s = std::sqrt(gg);
  return out;
}

MatrixInequalitySides evaluate(int n, double p, const SymMat& H, const SmallVec& g, bool sharp) {
  if (!(p > 1.0)) throw ValidationError("matrix inequality: p must be > 1");
  const Parts t = parts_of(n, H, g);
  const long double P = p, N = n;
  const long double w1 = std::pow(t.s, P - 2.0L);
  const long double w2 = w1 * w1;
  const long double dp = w1 * (t.trace + (P - 2.0L) * t.A);
  const long double coef = sharp ? (P * P - 2.0L * P + 2.0L) : P * (P - 2.0L);
  const long double lhs = w2 * (t.norm_sq_H + coef * t.A * t.A);
  const long double mid = dp / N - (P - 1.0L) * w1 * t.A;
  long double rhs = dp * dp / N + N / (N - 1.0L) * mid * mid;
  if (sharp) rhs += 2.0L * w2 * t.grad_grad_sq;
  return {static_cast<double>(lhs), static_cast<double>(rhs), static_cast<double>(lhs - rhs)};
}

}  // namespace

MatrixInequalitySides matrix_inequality(int n, double p, const SymMat& H, const SmallVec& g) {
  return evaluate(n, p, H, g, true);
}
double matrix_inequality_gap(int n, double p, const SymMat& H, const SmallVec& g) {
  return matrix_inequality(n, p, H, g).gap;
}
MatrixInequalitySides refined_inequality(int n, double p, const SymMat& H, const SmallVec& g) {
  return evaluate(n, p, H, g, false);
}
double refined_inequality_gap(int n, double p, const SymMat& H, const SmallVec& g) {
  return refined_inequality(n, p, H, g).gap;
}

SweepResult matrix_inequality_sweep(const SweepConfig& config) {
  if (config.shards < 1) throw ValidationError("sweep: shards must be >= 1");
  if (config.dims.empty()) throw ValidationError("sweep: dims must be non-empty");
  for (int n : config.dims)
    if (n < 2 || n > 6) throw ValidationError("sweep: dims must lie in [2, 6]");
  if (!(config.p_min > 1.0) || config.p_max < config.p_min)
    throw ValidationError("sweep: need 1 < p_min <= p_max");

  const auto start = std::chrono::steady_clock::now();
  const int shards = config.shards;
  struct ShardResult {
    SweepWitness worst, worst_refined;
  };
  std::vector<ShardResult> results(shards);

  auto run_shard = [&](int k) {
    std::uint64_t count = config.samples / shards + (static_cast<std::uint64_t>(k) < config.samples % shards ? 1 : 0);
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> pdist(config.p_min, config.p_max);
    std::uniform_int_distribution<std::size_t> ndist(0, config.dims.size() - 1);
    ShardResult r;
    r.worst.gap = r.worst_refined.refined_gap = std::numeric_limits<double>::infinity();
    SymMat H;
    SmallVec g;
    for (std::uint64_t s = 0; s < count; ++s) {
      const int n = config.dims[ndist(rng)];
      const double p = pdist(rng);
      H.resize(n, n);
      g.resize(n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) H(i, j) = H(j, i) = normal(rng);
      for (int i = 0; i < n; ++i) g[i] = normal(rng);
      g /= g.norm();
      const double gap = matrix_inequality_gap(n, p, H, g);
      const double refined = refined_inequality_gap(n, p, H, g);
      if (gap < r.worst.gap) r.worst = {n, p, gap, refined, H, g, k};
      if (refined < r.worst_refined.refined_gap) r.worst_refined = {n, p, gap, refined, H, g, k};
    }
    results[k] = r;
  };

  int threads = config.threads > 0 ? config.threads
                                   : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, shards);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int k = next++; k < shards; k = next++) run_shard(k);
    });
  for (auto& th : pool) th.join();

  SweepResult out;
  out.samples = config.samples;
  out.min_gap = out.min_refined_gap = std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    out.shard_witnesses.push_back(r.worst);
    if (r.worst.gap < out.min_gap) {
      out.min_gap = r.worst.gap;
      out.witness = r.worst;
    }
    if (r.worst_refined.refined_gap < out.min_refined_gap) {
      out.min_refined_gap = r.worst_refined.refined_gap;
      out.refined_witness = r.worst_refined;
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "kind,shard,n,p,gap,refined_gap,H,g\n";
  out.precision(17);
  auto row = [&](const char* kind, const SweepWitness& w) {
    out << kind << ',' << w.shard << ',' << w.n << ',' << w.p << ',' << w.gap << ','
        << w.refined_gap << ',';
    for (int i = 0; i < w.H.rows(); ++i)
      for (int j = 0; j < w.H.cols(); ++j) out << (i + j ? " " : "") << w.H(i, j);
    out << ',';
    for (int i = 0; i < w.g.size(); ++i) out << (i ? " " : "") << w.g[i];
    out << '\n';
  };
  row("global", result.witness);
  row("global_refined", result.refined_witness);
  for (const auto& w : result.shard_witnesses) row("shard", w);
}

RadialProfile radial_fd_solve(int n, double p, double R, int cells) {
  check_radial_args(n, p, R);
  if (cells < 100) throw ValidationError("radial_fd_solve: grid size must be >= 100");
  const int N = cells;
  const double dr = R / N;
  std::vector<double> w(N), m(N);
  for (int i = 0; i < N; ++i) {
    const double rp = (i + 0.5) * dr;
    const double rm = i == 0 ? 0.0 : (i - 0.5) * dr;
    w[i] = std::pow(rp, n - 1.0) * dr;
    m[i] = (std::pow(rp, n) - std::pow(rm, n)) / n;
  }

  // Divergence form: the flux through edge i balances the load of nodes 0..i, so
  // w_i |s_i|^{p-2} s_i / dr = -M_i fixes every slope s_i; u follows from u_N = 0.
  std::vector<double> u(N + 1, 0.0);
  std::vector<double> flux(N);
  double M = 0.0;
  for (int i = 0; i < N; ++i) {
    M += m[i];
    flux[i] = -M;
  }
  for (int i = N - 1; i >= 0; --i) {
    const double s = -std::pow(-flux[i] * dr / w[i], 1.0 / (p - 1.0));
    u[i] = u[i + 1] - s * dr;
  }

  // Residual of the discrete equations, relative to the load.
  std::vector<double> history;
  double worst = 0.0, scale = 0.0;
  for (int i = 0; i < N; ++i) {
    auto f = [&](int j) {
      const double d = (u[j + 1] - u[j]) / dr;
      return w[j] * std::pow(std::abs(d), p - 2.0) * d / dr;
    };
    const double r = f(i) - (i > 0 ? f(i - 1) : 0.0) + m[i];
    if (!std::isfinite(r)) throw ConvergenceError("radial_fd_solve: non-finite residual", 0.0, {});
    worst = std::max(worst, std::abs(r));
    scale = std::max(scale, std::abs(flux[i]));
  }
  history.push_back(worst);
  if (worst <= 1e-9 * scale) return RadialProfile::tabulated(n, p, R, u);
  throw ConvergenceError("radial_fd_solve: discrete equations not satisfied", 0.0, history);
}

}  // namespace plap
