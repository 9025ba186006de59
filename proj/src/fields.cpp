#include "plap/fields.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "plap/error.hpp"

namespace plap {

namespace {

// Gradients of the three barycentric basis functions of triangle t.
std::array<Vec2, 3> basis_gradients(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const double twice_area = 2.0 * mesh.triangle_area(t);
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = mesh.vertices[tri[(i + 2) % 3]] - mesh.vertices[tri[(i + 1) % 3]];
    g[i] = Vec2(-e.y(), e.x()) / twice_area;
  }
  return g;
}

template <class T>
T interpolate_at(const TriMesh& mesh, const std::vector<T>& nodal, int t,
                 const std::array<double, 3>& b) {
  const auto& tri = mesh.triangles[t];
  return b[0] * nodal[tri[0]] + b[1] * nodal[tri[1]] + b[2] * nodal[tri[2]];
}

double interpolate_at(const TriMesh& mesh, const Eigen::VectorXd& nodal, int t,
                      const std::array<double, 3>& b) {
  const auto& tri = mesh.triangles[t];
  return b[0] * nodal[tri[0]] + b[1] * nodal[tri[1]] + b[2] * nodal[tri[2]];
}

std::vector<int> patch_of(int v, const std::vector<std::vector<int>>& nbr, bool two_rings) {
  std::vector<int> patch{v};
  patch.insert(patch.end(), nbr[v].begin(), nbr[v].end());
  if (two_rings) {
    for (int w : nbr[v]) patch.insert(patch.end(), nbr[w].begin(), nbr[w].end());
    std::sort(patch.begin(), patch.end());
    patch.erase(std::unique(patch.begin(), patch.end()), patch.end());
  }
  return patch;
}

GradientRecovery build_ppr(const TriMesh& mesh) {
  const int nv = static_cast<int>(mesh.num_vertices());
  const auto nbr = mesh.vertex_neighbors();
  std::vector<Eigen::Triplet<double>> tx, ty;
  for (int v = 0; v < nv; ++v) {
    const bool wide = mesh.on_boundary[v] || nbr[v].size() + 1 < 8;
    const auto patch = patch_of(v, nbr, wide);
    const Vec2 c = mesh.vertices[v];
    double s = 0.0;
    for (int w : patch) s = std::max(s, (mesh.vertices[w] - c).norm());
    Eigen::MatrixXd A(patch.size(), 6);
    for (std::size_t k = 0; k < patch.size(); ++k) {
      const Vec2 d = (mesh.vertices[patch[k]] - c) / s;
      A.row(static_cast<Eigen::Index>(k)) << 1.0, d.x(), d.y(), d.x() * d.x(), d.x() * d.y(),
          d.y() * d.y();
    }
    const Eigen::MatrixXd pinv = A.completeOrthogonalDecomposition().pseudoInverse();
    for (std::size_t k = 0; k < patch.size(); ++k) {
      tx.emplace_back(v, patch[k], pinv(1, static_cast<Eigen::Index>(k)) / s);
      ty.emplace_back(v, patch[k], pinv(2, static_cast<Eigen::Index>(k)) / s);
    }
  }
  GradientRecovery op;
  op.dx.resize(nv, nv);
  op.dy.resize(nv, nv);
  op.dx.setFromTriplets(tx.begin(), tx.end());
  op.dy.setFromTriplets(ty.begin(), ty.end());
  return op;
}

GradientRecovery build_averaging(const TriMesh& mesh) {
  const int nv = static_cast<int>(mesh.num_vertices());
  std::vector<double> area_sum(nv, 0.0);
  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t)
    for (int v : mesh.triangles[t]) area_sum[v] += mesh.triangle_area(t);
  std::vector<Eigen::Triplet<double>> tx, ty;
  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
    const auto g = basis_gradients(mesh, t);
    const double area = mesh.triangle_area(t);
    for (int v : mesh.triangles[t]) {
      const double w = area / area_sum[v];
      for (int i = 0; i < 3; ++i) {
        tx.emplace_back(v, mesh.triangles[t][i], w * g[i].x());
        ty.emplace_back(v, mesh.triangles[t][i], w * g[i].y());
      }
    }
  }
  GradientRecovery op;
  op.dx.resize(nv, nv);
  op.dy.resize(nv, nv);
  op.dx.setFromTriplets(tx.begin(), tx.end());
  op.dy.setFromTriplets(ty.begin(), ty.end());
  return op;
}

pointwise::Derivs<2> frame_from(const ConformalMetric& metric, const Vec2& x, const Vec2& grad,
                                const Mat2& hess) {
  if (metric.is_flat()) return {grad, hess, 0.0};
  return frame_derivs(metric, x, grad, hess);
}

}  // namespace

ScalarField ScalarField::interpolate(const TriMesh& mesh, const AnalyticField& f) {
  ScalarField u = zeros(mesh);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    u.values[static_cast<Eigen::Index>(v)] = f.value(mesh.vertices[v]);
  return u;
}

void check_field(const TriMesh& mesh, const ScalarField& u) {
  if (static_cast<std::size_t>(u.values.size()) != mesh.num_vertices())
    throw ValidationError("field has " + std::to_string(u.values.size()) +
                          " values but the mesh has " + std::to_string(mesh.num_vertices()) +
                          " vertices");
  if (!u.values.allFinite()) throw ValidationError("field contains non-finite values");
}

GradientRecovery GradientRecovery::build(const TriMesh& mesh, RecoveryScheme scheme) {
  return scheme == RecoveryScheme::kAveraging ? build_averaging(mesh) : build_ppr(mesh);
}

NodalDerivatives recover_nodal(const GradientRecovery& op, const Eigen::VectorXd& u) {
  const Eigen::VectorXd gx = op.dx * u, gy = op.dy * u;
  const Eigen::VectorXd hxx = op.dx * gx, hxy = op.dy * gx, hyx = op.dx * gy, hyy = op.dy * gy;
  NodalDerivatives out;
  out.grad.resize(u.size());
  out.hess.resize(u.size());
  for (Eigen::Index v = 0; v < u.size(); ++v) {
    out.grad[v] = Vec2(gx[v], gy[v]);
    const double off = 0.5 * (hxy[v] + hyx[v]);
    out.hess[v] << hxx[v], off, off, hyy[v];
  }
  return out;
}

Vec2 element_gradient(const TriMesh& mesh, const Eigen::VectorXd& u, int t) {
  const auto g = basis_gradients(mesh, t);
  const auto& tri = mesh.triangles[t];
  return u[tri[0]] * g[0] + u[tri[1]] * g[1] + u[tri[2]] * g[2];
}

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh) {
  Vec2 lo = mesh.vertices.front(), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double span = std::max(hi.x() - lo.x(), hi.y() - lo.y());
  cell_ = std::max(mesh.h > 0 ? 2.0 * mesh.h : span / 32.0, 1e-12);
  lo_ = lo - Vec2::Constant(1e-9 * span);
  nx_ = static_cast<int>((hi.x() - lo_.x()) / cell_) + 1;
  ny_ = static_cast<int>((hi.y() - lo_.y()) / cell_) + 1;
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
    Vec2 a = mesh.vertices[mesh.triangles[t][0]], b = a;
    for (int v : mesh.triangles[t]) {
      a = a.cwiseMin(mesh.vertices[v]);
      b = b.cwiseMax(mesh.vertices[v]);
    }
    const int i0 = static_cast<int>((a.x() - lo_.x()) / cell_);
    const int i1 = static_cast<int>((b.x() - lo_.x()) / cell_);
    const int j0 = static_cast<int>((a.y() - lo_.y()) / cell_);
    const int j1 = static_cast<int>((b.y() - lo_.y()) / cell_);
    for (int i = i0; i <= std::min(i1, nx_ - 1); ++i)
      for (int j = j0; j <= std::min(j1, ny_ - 1); ++j) buckets_[i * ny_ + j].push_back(t);
  }
}

std::optional<PointLocator::Hit> PointLocator::locate(const Vec2& x) const {
  const int i = static_cast<int>(std::floor((x.x() - lo_.x()) / cell_));
  const int j = static_cast<int>(std::floor((x.y() - lo_.y()) / cell_));
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return std::nullopt;
  std::optional<Hit> best;
  double best_min = -1e300;
  for (int t : buckets_[i * ny_ + j]) {
    const auto& tri = mesh_->triangles[t];
    const Vec2 a = mesh_->vertices[tri[0]], b = mesh_->vertices[tri[1]],
               c = mesh_->vertices[tri[2]];
    const double det = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    const Vec2 d = x - a;
    const double l1 = (d.x() * (c - a).y() - d.y() * (c - a).x()) / det;
    const double l2 = ((b - a).x() * d.y() - (b - a).y() * d.x()) / det;
    const double l0 = 1.0 - l1 - l2;
    const double m = std::min({l0, l1, l2});
    if (m > best_min) {
      best_min = m;
      best = Hit{t, {l0, l1, l2}};
    }
  }
  if (!best || best_min < -1e-10) return std::nullopt;
  return best;
}

DerivativeBundle recover_derivatives(const TriMesh& mesh, const ScalarField& u,
                                     const ConformalMetric& metric,
                                     const RecoveryOptions& options) {
  return recover_derivatives(mesh, u, metric, GradientRecovery::build(mesh, options.scheme),
                             options.delta_crit);
}

DerivativeBundle recover_derivatives(const TriMesh& mesh, const ScalarField& u,
                                     const ConformalMetric& metric, const GradientRecovery& op,
                                     double delta_crit) {
  check_field(mesh, u);
  DerivativeBundle b;
  b.nodal = recover_nodal(op, u.values);
  b.points.resize(mesh.quadrature.size());
  double max_grad = 0.0;
  for (std::size_t k = 0; k < mesh.quadrature.size(); ++k) {
    const auto& q = mesh.quadrature[k];
    auto& pt = b.points[k];
    pt.x = q.x;
    pt.triangle = q.triangle;
    pt.weight = q.weight;
    pt.dv = metric.is_flat() ? q.weight : q.weight * std::exp(2.0 * metric.phi(q.x));
    pt.u = interpolate_at(mesh, u.values, q.triangle, q.bary);
    pt.grad = interpolate_at(mesh, b.nodal.grad, q.triangle, q.bary);
    pt.hess = interpolate_at(mesh, b.nodal.hess, q.triangle, q.bary);
    pt.frame = frame_from(metric, q.x, pt.grad, pt.hess);
    pt.grad_norm = pt.frame.g.norm();
    max_grad = std::max(max_grad, pt.grad_norm);
  }
  b.delta_crit = delta_crit >= 0.0 ? delta_crit : std::max(1e-8, 1e-3 * mesh.h * max_grad);

  std::size_t masked = 0;
  for (auto& pt : b.points) {
    pt.hess_norm = pt.frame.H.norm();
    pt.masked = pt.grad_norm <= b.delta_crit;
    if (pt.masked) {
      ++masked;
      continue;
    }
    pt.a_u = pointwise::a_u(pt.frame.g, pt.frame.H);
    pt.grad_grad_norm = std::sqrt(pointwise::grad_grad_norm_sq(pt.frame.g, pt.frame.H));
  }
  b.masked_fraction =
      b.points.empty() ? 0.0 : static_cast<double>(masked) / static_cast<double>(b.points.size());

  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2 g0 = b.nodal.grad[tri[0]];
    Mat2 J;
    J.col(0) = b.nodal.grad[tri[1]] - g0;
    J.col(1) = b.nodal.grad[tri[2]] - g0;
    const double det = J.determinant();
    if (std::abs(det) < 1e-300) continue;
    const Vec2 st = J.inverse() * (-g0);
    if (st.x() >= 0.0 && st.y() >= 0.0 && st.x() + st.y() <= 1.0) b.critical_triangles.push_back(t);
  }
  return b;
}

std::vector<char> triangle_neighborhood(const TriMesh& mesh, const std::vector<int>& seeds,
                                        int rings) {
  std::vector<char> in(mesh.num_triangles(), 0);
  for (int t : seeds) in[t] = 1;
  const auto vt = mesh.vertex_triangles();
  for (int r = 0; r < rings; ++r) {
    std::vector<char> touched(mesh.num_vertices(), 0);
    for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t)
      if (in[t])
        for (int v : mesh.triangles[t]) touched[v] = 1;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
      if (touched[v])
        for (int t : vt[v]) in[t] = 1;
  }
  return in;
}

std::vector<double> p_function(const DerivativeBundle& bundle, double p, double n) {
  std::vector<double> out(bundle.points.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& pt = bundle.points[k];
    out[k] = (p - 1.0) / p * std::pow(pt.grad_norm, p) + pt.u / n;
  }
  return out;
}

ScalarField p_function_nodal(const TriMesh& mesh, const ScalarField& u,
                             const NodalDerivatives& nodal, const ConformalMetric& metric,
                             double p, double n) {
  check_field(mesh, u);
  ScalarField P = ScalarField::zeros(mesh);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const double s = metric.is_flat() ? 1.0 : std::exp(-metric.phi(mesh.vertices[v]));
    const double g = s * nodal.grad[v].norm();
    const auto i = static_cast<Eigen::Index>(v);
    P.values[i] = (p - 1.0) / p * std::pow(g, p) + u.values[i] / n;
  }
  return P;
}

PointValues p_laplacian(const DerivativeBundle& bundle, double p) {
  PointValues out(bundle.points.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& pt = bundle.points[k];
    if (!pt.masked) out[k] = pointwise::p_laplacian(pt.frame.g, pt.frame.H, p);
  }
  return out;
}

PointValues linearized_apply(const DerivativeBundle& bundle, const ConformalMetric& metric,
                             const AnalyticField& eta, double p) {
  PointValues out(bundle.points.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& pt = bundle.points[k];
    if (pt.masked) continue;
    const Derivs3 d = eta.eval(pt.x);
    const FrameScalar e = frame_scalar(metric, pt.x, Jet{d.value, d.grad, d.hess});
    out[k] = pointwise::linearized_apply<2>(pt.frame, e.grad, e.hess, p);
  }
  return out;
}

PointValues linearized_apply(const DerivativeBundle& bundle, const TriMesh& mesh,
                             const ConformalMetric& metric, const GradientRecovery& op,
                             const ScalarField& eta, double p) {
  check_field(mesh, eta);
  const NodalDerivatives nd = recover_nodal(op, eta.values);
  PointValues out(bundle.points.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& pt = bundle.points[k];
    if (pt.masked) continue;
    const auto& q = mesh.quadrature[k];
    const Vec2 g = interpolate_at(mesh, nd.grad, q.triangle, q.bary);
    const Mat2 H = interpolate_at(mesh, nd.hess, q.triangle, q.bary);
    const FrameScalar e = frame_scalar(metric, pt.x, Jet{0.0, g, H});
    out[k] = pointwise::linearized_apply<2>(pt.frame, e.grad, e.hess, p);
  }
  return out;
}

PointValues luP_pointwise(const DerivativeBundle& bundle, double p, double n) {
  PointValues out(bundle.points.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& pt = bundle.points[k];
    if (!pt.masked) out[k] = pointwise::luP_torsion(pt.frame, p, n);
  }
  return out;
}

std::vector<Vec2> flux_vector_field(const DerivativeBundle& bundle, const ConformalMetric& metric,
                                    const std::vector<Vec2>& grad_P, double p) {
  std::vector<Vec2> out(bundle.points.size(), Vec2::Zero());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& pt = bundle.points[k];
    if (pt.masked) continue;
    const double s = metric.is_flat() ? 1.0 : std::exp(-metric.phi(pt.x));
    out[k] = pointwise::flux_vector<2>(pt.frame.g, Vec2(s * grad_P[k]), p);
  }
  return out;
}

std::vector<Vec2> p_function_gradient(const TriMesh& mesh, const DerivativeBundle& bundle,
                                      const GradientRecovery& op, const ScalarField& P) {
  check_field(mesh, P);
  const Eigen::VectorXd gx = op.dx * P.values, gy = op.dy * P.values;
  std::vector<Vec2> out(bundle.points.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& q = mesh.quadrature[k];
    out[k] = Vec2(interpolate_at(mesh, gx, q.triangle, q.bary),
                  interpolate_at(mesh, gy, q.triangle, q.bary));
  }
  return out;
}

DivergenceCheck flux_divergence_check(const TriMesh& mesh, const BoundaryGeometry& bg,
                                      const ConformalMetric& metric, const GradientRecovery& op,
                                      const DerivativeBundle& bundle, const ScalarField& P,
                                      double p) {
  // With frame components a, the Euclidean field Y = e^{phi} a satisfies
  // div_g a dv_g = div Y dx and <a, nu_g> ds_g = Y . nu ds.
  const Eigen::VectorXd gPx = op.dx * P.values, gPy = op.dy * P.values;
  const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
  Eigen::VectorXd yx(nv), yy(nv);
  for (Eigen::Index v = 0; v < nv; ++v) {
    const Vec2 x = mesh.vertices[v];
    const double phi = metric.is_flat() ? 0.0 : metric.phi(x);
    const double s = std::exp(-phi);
    const Vec2 g = s * bundle.nodal.grad[v];
    Vec2 a = Vec2::Zero();
    if (g.norm() > bundle.delta_crit) a = pointwise::flux_vector<2>(g, Vec2(s * Vec2(gPx[v], gPy[v])), p);
    const Vec2 y = std::exp(phi) * a;
    yx[v] = y.x();
    yy[v] = y.y();
  }
  const Eigen::VectorXd div = op.dx * yx + op.dy * yy;
  DivergenceCheck out;
  for (const auto& q : mesh.quadrature) out.volume += q.weight * interpolate_at(mesh, div, q.triangle, q.bary);
  for (const auto& node : bg.nodes)
    out.boundary += node.weight * Vec2(yx[node.vertex], yy[node.vertex]).dot(node.normal);
  const double scale = std::max({std::abs(out.volume), std::abs(out.boundary), 1e-300});
  out.relative_gap = std::abs(out.volume - out.boundary) / scale;
  return out;
}

void write_points_csv(std::ostream& out, const DerivativeBundle& bundle, const std::string& name,
                      const PointValues& values) {
  out << "x,y," << name << '\n';
  out.precision(17);
  for (std::size_t k = 0; k < bundle.points.size(); ++k) {
    out << bundle.points[k].x.x() << ',' << bundle.points[k].x.y() << ',';
    if (k < values.size() && values[k]) out << *values[k];
    out << '\n';
  }
}

void write_nodal_csv(std::ostream& out, const TriMesh& mesh, const std::string& name,
                     const ScalarField& u) {
  out << "x,y," << name << '\n';
  out.precision(17);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    out << mesh.vertices[v].x() << ',' << mesh.vertices[v].y() << ','
        << u.values[static_cast<Eigen::Index>(v)] << '\n';
}

}  // namespace plap
