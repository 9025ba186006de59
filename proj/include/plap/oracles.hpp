#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace plap {

/// Radial torsion profile u(r) on [0, R] in dimension n, closed form or tabulated.
class RadialProfile {
 public:
  static RadialProfile exact(int n, double p, double R);
  static RadialProfile tabulated(int n, double p, double R, std::vector<double> values);

  int n() const { return n_; }
  double p() const { return p_; }
  double R() const { return R_; }
  bool is_exact() const { return values_.empty(); }

  double u(double r) const;
  double du(double r) const;
  double d2u(double r) const;
  /// -(r^{n-1}|u'|^{p-2}u')'/r^{n-1} - 1 evaluated from u' and u''.
  double ode_residual(double r) const;

  /// Grid values (tabulated profiles only).
  const std::vector<double>& values() const { return values_; }
  /// One-sided second-order u'(R) for tabulated profiles; exact value otherwise.
  double boundary_slope() const;

 private:
  int n_ = 2;
  double p_ = 2.0, R_ = 1.0;
  std::vector<double> values_;
  double dr_ = 0.0;
};

RadialProfile radial_exact(int n, double p, double R);

/// P0 = ((p-1)/p) n^{-p/(p-1)} R^{p/(p-1)}.
double p_ball_constant(int n, double p, double R);

struct EllipseIntegrals {
  double area = 0.0;
  double perimeter = 0.0;
  double inv_H_integral = 0.0;  // integral of 1/H ds
  double H0 = 0.0;              // perimeter / (2 area)
  double max_H = 0.0;
  double min_H = 0.0;
};

/// Adaptive Gauss-Kronrod quadrature of the parametric integrands; requires a >= b > 0.
EllipseIntegrals ellipse_boundary_integrals(double a, double b);

using SymMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;

struct MatrixInequalitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

/// |g|^{2(p-2)}(|H|^2 + (p^2-2p+2)A^2) minus
/// (Dp)^2/n + n/(n-1)(Dp/n - (p-1)|g|^{p-2}A)^2 + 2|g|^{2(p-2)}|Hg|^2/|g|^2.
MatrixInequalitySides matrix_inequality(int n, double p, const SymMat& H, const SmallVec& g);
double matrix_inequality_gap(int n, double p, const SymMat& H, const SmallVec& g);

/// The weaker estimate |g|^{2(p-2)}(|H|^2 + p(p-2)A^2) >= (Dp)^2/n + n/(n-1)(...)^2.
MatrixInequalitySides refined_inequality(int n, double p, const SymMat& H, const SmallVec& g);
double refined_inequality_gap(int n, double p, const SymMat& H, const SmallVec& g);

struct SweepWitness {
  int n = 0;
  double p = 0.0;
  double gap = 0.0;
  double refined_gap = 0.0;
  SymMat H;
  SmallVec g;
  int shard = 0;
};

struct SweepConfig {
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 20240611;
  int shards = 8;
  std::vector<int> dims{2, 3, 4};
  double p_min = 1.1, p_max = 6.0;
  /// Worker threads; 0 selects the hardware concurrency.
  int threads = 0;
};

struct SweepResult {
  std::uint64_t samples = 0;
  double min_gap = 0.0;
  double min_refined_gap = 0.0;
  SweepWitness witness;          // sample attaining min_gap
  SweepWitness refined_witness;  // sample attaining min_refined_gap
  std::vector<SweepWitness> shard_witnesses;
  double seconds = 0.0;
};

/// Seeded sharded random sweep: H with independent N(0,1) entries symmetrized, unit g,
/// p uniform in [p_min, p_max], n uniform over dims. Results do not depend on threads.
SweepResult matrix_inequality_sweep(const SweepConfig& config);

/// "kind,shard,n,p,gap,refined_gap,H,g" rows for the global and per-shard witnesses; H and g
/// are space-separated entry lists.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Finite-volume discretization of (r^{n-1}|u'|^{p-2}u')' = -r^{n-1} on `cells` uniform
/// cells, solved through its discrete flux balance. Throws ConvergenceError when the
/// discrete equations are not met to round-off.
RadialProfile radial_fd_solve(int n, double p, double R, int cells);

}  // namespace plap
