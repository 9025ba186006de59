#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "plap/analytic.hpp"
#include "plap/geometry.hpp"
#include "plap/metric.hpp"
#include "plap/pointwise.hpp"

namespace plap {

/// Nodal P1 field on a mesh.
struct ScalarField {
  Eigen::VectorXd values;

  static ScalarField zeros(const TriMesh& mesh) {
    return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()))};
  }
  static ScalarField interpolate(const TriMesh& mesh, const AnalyticField& f);
};

/// Throws ValidationError when the sizes disagree or a value is not finite.
void check_field(const TriMesh& mesh, const ScalarField& u);

enum class RecoveryScheme {
  /// Least-squares quadratic fit over a vertex patch (exact on quadratics).
  kPolynomialPreserving,
  /// Area-weighted average of element gradients.
  kAveraging,
};

/// Linear nodal-gradient operator: grad(v) = (Dx u, Dy u)(v).
struct GradientRecovery {
  Eigen::SparseMatrix<double> dx, dy;

  static GradientRecovery build(const TriMesh& mesh, RecoveryScheme scheme);
};

struct NodalDerivatives {
  std::vector<Vec2> grad;
  std::vector<Mat2> hess;  // symmetrized
};

/// Nodal gradient, then the same operator applied to the gradient for the Hessian.
NodalDerivatives recover_nodal(const GradientRecovery& op, const Eigen::VectorXd& u);

/// Gradient of the P1 interpolant on triangle t.
Vec2 element_gradient(const TriMesh& mesh, const Eigen::VectorXd& u, int t);

/// Bucket-grid point location on a mesh.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& mesh);
  struct Hit {
    int triangle = -1;
    std::array<double, 3> bary{};
  };
  std::optional<Hit> locate(const Vec2& x) const;

 private:
  const TriMesh* mesh_;
  Vec2 lo_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Values at one interior quadrature point. Frame quantities use the metric's
/// orthonormal frame e^{-phi} d_i; flat metrics give the Euclidean values.
struct BundlePoint {
  Vec2 x;
  int triangle = -1;
  double weight = 0.0;  // Euclidean quadrature weight
  double dv = 0.0;      // weight * e^{2 phi}
  double u = 0.0;
  Vec2 grad = Vec2::Zero();  // Euclidean
  Mat2 hess = Mat2::Zero();  // Euclidean
  pointwise::Derivs<2> frame;
  double grad_norm = 0.0;       // |grad u|_g
  double a_u = 0.0;             // 0 when masked
  double grad_grad_norm = 0.0;  // |grad |grad u||_g, 0 when masked
  double hess_norm = 0.0;       // Frobenius norm of the covariant Hessian
  bool masked = false;
};

struct RecoveryOptions {
  RecoveryScheme scheme = RecoveryScheme::kPolynomialPreserving;
  /// Negative selects the default max(1e-8, 1e-3 h max|grad u|).
  double delta_crit = -1.0;
};

struct DerivativeBundle {
  std::vector<BundlePoint> points;
  NodalDerivatives nodal;
  double delta_crit = 0.0;
  double masked_fraction = 0.0;
  /// Triangles on which the interpolated recovered gradient has a zero.
  std::vector<int> critical_triangles;
};

DerivativeBundle recover_derivatives(const TriMesh& mesh, const ScalarField& u,
                                     const ConformalMetric& metric,
                                     const RecoveryOptions& options = {});
DerivativeBundle recover_derivatives(const TriMesh& mesh, const ScalarField& u,
                                     const ConformalMetric& metric, const GradientRecovery& op,
                                     double delta_crit = -1.0);

/// Triangles within `rings` vertex-adjacency rings of the seed triangles (seeds included).
std::vector<char> triangle_neighborhood(const TriMesh& mesh, const std::vector<int>& seeds,
                                        int rings);

using PointValues = std::vector<std::optional<double>>;

/// P = ((p-1)/p)|grad u|_g^p + u/n at quadrature points.
std::vector<double> p_function(const DerivativeBundle& bundle, double p, double n);
/// P at the vertices from nodal recovered gradients.
ScalarField p_function_nodal(const TriMesh& mesh, const ScalarField& u,
                             const NodalDerivatives& nodal, const ConformalMetric& metric,
                             double p, double n);

/// Riemannian Delta_p u; nullopt at masked points.
PointValues p_laplacian(const DerivativeBundle& bundle, double p);

/// L_u eta for a closed-form eta.
PointValues linearized_apply(const DerivativeBundle& bundle, const ConformalMetric& metric,
                             const AnalyticField& eta, double p);
/// L_u eta for a nodal eta, derivatives recovered with `op`.
PointValues linearized_apply(const DerivativeBundle& bundle, const TriMesh& mesh,
                             const ConformalMetric& metric, const GradientRecovery& op,
                             const ScalarField& eta, double p);

/// L_u P in the constant-source form; nullopt at masked points.
PointValues luP_pointwise(const DerivativeBundle& bundle, double p, double n);

/// Flux a = (p-2)|g|^{p-4}<g, grad P> g + |g|^{p-2} grad P in frame components, with
/// a = 0 at masked points. grad_P is the Euclidean gradient of P per bundle point.
std::vector<Vec2> flux_vector_field(const DerivativeBundle& bundle, const ConformalMetric& metric,
                                    const std::vector<Vec2>& grad_P, double p);

/// Euclidean gradient of P per bundle point by recovery of the nodal P.
std::vector<Vec2> p_function_gradient(const TriMesh& mesh, const DerivativeBundle& bundle,
                                      const GradientRecovery& op, const ScalarField& P);

struct DivergenceCheck {
  double volume = 0.0;    // integral of div_g a dv_g
  double boundary = 0.0;  // integral of <a, nu_g> ds_g
  double relative_gap = 0.0;
};

/// Both sides of the divergence theorem for the flux field of P.
DivergenceCheck flux_divergence_check(const TriMesh& mesh, const BoundaryGeometry& bg,
                                      const ConformalMetric& metric, const GradientRecovery& op,
                                      const DerivativeBundle& bundle, const ScalarField& P,
                                      double p);

/// "x,y,<name>" rows; undefined values are written as empty cells.
void write_points_csv(std::ostream& out, const DerivativeBundle& bundle, const std::string& name,
                      const PointValues& values);
void write_nodal_csv(std::ostream& out, const TriMesh& mesh, const std::string& name,
                     const ScalarField& u);

}  // namespace plap
