#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "plap/fields.hpp"
#include "plap/geometry.hpp"
#include "plap/metric.hpp"

namespace plap {

struct SolveConfig {
  double p = 2.0;
  /// Initial regularization; negative selects 0.1 times the gradient scale of the start field.
  double eps0 = -1.0;
  double rho = 0.1;
  double eps_min = 1e-8;
  /// Newton stops when |residual| <= newton_tol * |load| on the free nodes.
  double newton_tol = 1e-10;
  int max_newton_iter = 50;
  double backtrack = 0.5;
  int max_backtracks = 40;
  /// Only the 3-point interior rule is implemented.
  int quadrature_order = 2;

  /// Throws ValidationError naming the violated invariant.
  void validate() const;
};

/// G* = (eps^2 + |grad u|_g^2)^{(p-2)/2} and the tangent coefficient matrix
/// G* (I + (p-2) g g^T / (eps^2 + |g|^2)) for the frame gradient g.
struct RegularizedFlux {
  double coefficient = 1.0;
  Mat2 tangent = Mat2::Identity();

  static RegularizedFlux at(const Vec2& frame_grad, double p, double eps);
};

struct EnergyAssembly {
  double energy = 0.0;
  Eigen::VectorXd residual;           // dJ/du for every vertex (boundary rows included)
  Eigen::SparseMatrix<double> tangent;  // d^2 J/du^2, symmetric
};

/// J_eps(u) = int (1/p)[(eps^2 + |grad u|_g^2)^{p/2} - eps^p] dv_g - int u dv_g with
/// residual and tangent. Throws NumericalFailure on non-finite element contributions.
EnergyAssembly assemble_energy_residual(const ScalarField& u, const TriMesh& mesh,
                                        const ConformalMetric& metric, double p, double eps,
                                        bool with_tangent = true);

struct EpsilonStep {
  double eps = 0.0;
  double residual_norm = 0.0;
  int newton_iterations = 0;
  double energy = 0.0;
  std::vector<double> residual_history;
  std::vector<double> energy_history;
};

struct Solution {
  ScalarField u;
  std::vector<EpsilonStep> steps;
  double final_eps = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  /// Fraction of elements whose gradient is below the critical threshold.
  double masked_fraction = 0.0;
  /// Discrete maximum principle: u > 0 at every interior vertex.
  bool interior_positive = false;
  double load_norm = 0.0;
};

/// eps-continuation with damped Newton; throws ConvergenceError carrying the residual
/// history when a Newton solve fails.
Solution solve(const TriMesh& mesh, const ConformalMetric& metric, const SolveConfig& config);

/// Boundary flux of the weak form: the sum of the residual rows at boundary vertices,
/// which equals the integral of |grad u|_g^{p-2} u_nu ds_g for a discrete solution.
double variational_boundary_flux(const TriMesh& mesh, const ConformalMetric& metric,
                                 const Solution& solution, double p);

struct ConvergenceRow {
  double h = 0.0;
  double linf_error = 0.0;
  double l2_error = 0.0;
  double observed_order = 0.0;  // L2 order against the previous row; 0 on the first
};

/// Errors against the exact radial solution on disk(R) meshes. The metric must be flat or
/// constant.
std::vector<ConvergenceRow> convergence_study(const DomainSpec& spec,
                                              const ConformalMetric& metric,
                                              const SolveConfig& config,
                                              const std::vector<double>& h_list);

}  // namespace plap
