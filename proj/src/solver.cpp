#include "plap/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>

#include "plap/error.hpp"
#include "plap/oracles.hpp"

namespace plap {

void SolveConfig::validate() const {
  if (!(p > 1.0)) throw ValidationError("solver config: p must be > 1");
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("solver config: rho must lie in (0, 1)");
  if (!(eps_min > 0.0)) throw ValidationError("solver config: eps_min must be > 0");
  if (eps0 > 0.0 && !(eps_min < eps0))
    throw ValidationError("solver config: eps_min must be < eps0");
  if (!(newton_tol > 0.0)) throw ValidationError("solver config: newton_tol must be > 0");
  if (max_newton_iter < 1) throw ValidationError("solver config: max_newton_iter must be >= 1");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw ValidationError("solver config: backtrack factor must lie in (0, 1)");
  if (max_backtracks < 1) throw ValidationError("solver config: max_backtracks must be >= 1");
  if (quadrature_order != 2)
    throw ValidationError("solver config: only quadrature_order 2 (3-point rule) is available");
}

RegularizedFlux RegularizedFlux::at(const Vec2& g, double p, double eps) {
  const double A = eps * eps + g.squaredNorm();
  RegularizedFlux f;
  f.coefficient = std::pow(A, 0.5 * (p - 2.0));
  f.tangent = f.coefficient * (Mat2::Identity() + (p - 2.0) * g * g.transpose() / A);
  return f;
}

namespace {

// Geometry and metric weights reused across assemblies.
struct Context {
  const TriMesh* mesh = nullptr;
  std::vector<std::array<Vec2, 3>> basis;  // per triangle
  std::vector<double> e2, em2;             // per quadrature point
  std::vector<int> free_index;             // vertex -> free dof or -1
  std::vector<int> free_vertices;

  Context(const TriMesh& m, const ConformalMetric& metric) : mesh(&m) {
    basis.resize(m.num_triangles());
    for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
      const auto& tri = m.triangles[t];
      const double twice_area = 2.0 * m.triangle_area(t);
      for (int i = 0; i < 3; ++i) {
        const Vec2 e = m.vertices[tri[(i + 2) % 3]] - m.vertices[tri[(i + 1) % 3]];
        basis[t][i] = Vec2(-e.y(), e.x()) / twice_area;
      }
    }
    e2.assign(m.quadrature.size(), 1.0);
    em2.assign(m.quadrature.size(), 1.0);
    if (!metric.is_flat()) {
      for (std::size_t k = 0; k < m.quadrature.size(); ++k) {
        const double phi = metric.phi(m.quadrature[k].x);
        e2[k] = std::exp(2.0 * phi);
        em2[k] = std::exp(-2.0 * phi);
      }
    }
    free_index.assign(m.num_vertices(), -1);
    for (int v = 0; v < static_cast<int>(m.num_vertices()); ++v) {
      if (!m.on_boundary[v]) {
        free_index[v] = static_cast<int>(free_vertices.size());
        free_vertices.push_back(v);
      }
    }
  }

  Vec2 grad(const Eigen::VectorXd& u, int t) const {
    const auto& tri = mesh->triangles[t];
    return u[tri[0]] * basis[t][0] + u[tri[1]] * basis[t][1] + u[tri[2]] * basis[t][2];
  }
};

// (eps^2 + s2)^{p/2} - eps^p without cancellation.
double shifted_power(double s2, double eps, double p) {
  if (eps == 0.0) return std::pow(s2, 0.5 * p);
  return std::pow(eps, p) * std::expm1(0.5 * p * std::log1p(s2 / (eps * eps)));
}

EnergyAssembly assemble(const Context& ctx, const Eigen::VectorXd& u, double p, double eps,
                        bool with_tangent) {
  const TriMesh& mesh = *ctx.mesh;
  const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
  EnergyAssembly out;
  out.residual = Eigen::VectorXd::Zero(nv);
  std::vector<Eigen::Triplet<double>> trip;
  if (with_tangent) trip.reserve(27 * mesh.num_triangles());
  double energy = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& B = ctx.basis[t];
    const Vec2 g = ctx.grad(u, t);
    const double gb[3] = {g.dot(B[0]), g.dot(B[1]), g.dot(B[2])};
    double e_local = 0.0, r_local[3] = {0, 0, 0}, k_local[3][3] = {};
    for (int k = 0; k < 3; ++k) {
      const std::size_t qi = 3 * static_cast<std::size_t>(t) + k;
      const auto& q = mesh.quadrature[qi];
      const double s2 = ctx.em2[qi] * g.squaredNorm();
      const double A = eps * eps + s2;
      const double c = std::pow(A, 0.5 * (p - 2.0));
      const double uq = q.bary[0] * u[tri[0]] + q.bary[1] * u[tri[1]] + q.bary[2] * u[tri[2]];
      e_local += q.weight * ctx.e2[qi] * (shifted_power(s2, eps, p) / p - uq);
      for (int i = 0; i < 3; ++i) r_local[i] += q.weight * (c * gb[i] - ctx.e2[qi] * q.bary[i]);
      if (with_tangent) {
        // The rank-one term vanishes with g, so A = 0 contributes nothing.
        const double c2 = (p == 2.0 || A == 0.0)
                              ? 0.0
                              : (p - 2.0) * std::pow(A, 0.5 * (p - 4.0)) * ctx.em2[qi];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            k_local[i][j] += q.weight * (c * B[i].dot(B[j]) + c2 * gb[i] * gb[j]);
      }
    }
    bool finite = std::isfinite(e_local);
    for (int i = 0; i < 3; ++i) finite = finite && std::isfinite(r_local[i]);
    if (with_tangent)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) finite = finite && std::isfinite(k_local[i][j]);
    if (!finite)
      throw NumericalFailure("non-finite energy contribution on element " + std::to_string(t), t);
    energy += e_local;
    for (int i = 0; i < 3; ++i) {
      out.residual[tri[i]] += r_local[i];
      if (with_tangent)
        for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], k_local[i][j]);
    }
  }
  out.energy = energy;
  if (with_tangent) {
    out.tangent.resize(nv, nv);
    out.tangent.setFromTriplets(trip.begin(), trip.end());
  }
  return out;
}

Eigen::VectorXd restrict_free(const Context& ctx, const Eigen::VectorXd& full) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(ctx.free_vertices.size()));
  for (std::size_t i = 0; i < ctx.free_vertices.size(); ++i)
    r[static_cast<Eigen::Index>(i)] = full[ctx.free_vertices[i]];
  return r;
}

Eigen::SparseMatrix<double> restrict_free(const Context& ctx, const Eigen::SparseMatrix<double>& K) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(K.nonZeros());
  for (int c = 0; c < K.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
      const int i = ctx.free_index[it.row()], j = ctx.free_index[it.col()];
      if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
    }
  const auto n = static_cast<Eigen::Index>(ctx.free_vertices.size());
  Eigen::SparseMatrix<double> out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::VectorXd solve_free(const Context& ctx, const Eigen::SparseMatrix<double>& K,
                           const Eigen::VectorXd& rhs_full, double eps) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(restrict_free(ctx, K));
  if (ldlt.info() != Eigen::Success)
    throw ConvergenceError("tangent factorization failed", eps, {});
  const Eigen::VectorXd x = ldlt.solve(restrict_free(ctx, rhs_full));
  Eigen::VectorXd full = Eigen::VectorXd::Zero(rhs_full.size());
  for (std::size_t i = 0; i < ctx.free_vertices.size(); ++i)
    full[ctx.free_vertices[i]] = x[static_cast<Eigen::Index>(i)];
  return full;
}

double free_norm(const Context& ctx, const Eigen::VectorXd& v) {
  double s = 0.0;
  for (int i : ctx.free_vertices) s += v[i] * v[i];
  return std::sqrt(s);
}

double max_frame_gradient(const Context& ctx, const Eigen::VectorXd& u) {
  double m = 0.0;
  for (int t = 0; t < static_cast<int>(ctx.mesh->num_triangles()); ++t) {
    const double g2 = ctx.grad(u, t).squaredNorm();
    for (int k = 0; k < 3; ++k) m = std::max(m, std::sqrt(ctx.em2[3 * t + k] * g2));
  }
  return m;
}

// Damped Newton at fixed eps; updates u in place.
EpsilonStep newton(const Context& ctx, Eigen::VectorXd& u, const SolveConfig& cfg, double eps,
                   double load_norm) {
  EpsilonStep step;
  step.eps = eps;
  EnergyAssembly cur = assemble(ctx, u, cfg.p, eps, true);
  for (int it = 0;; ++it) {
    const double rn = free_norm(ctx, cur.residual);
    step.residual_history.push_back(rn);
    step.energy_history.push_back(cur.energy);
    if (rn <= cfg.newton_tol * load_norm) {
      step.residual_norm = rn;
      step.newton_iterations = it;
      step.energy = cur.energy;
      return step;
    }
    if (it >= cfg.max_newton_iter)
      throw ConvergenceError("Newton did not converge within " +
                                 std::to_string(cfg.max_newton_iter) + " iterations",
                             eps, step.residual_history);
    const Eigen::VectorXd delta = solve_free(ctx, cur.tangent, -cur.residual, eps);
    double slope = 0.0;
    for (int i : ctx.free_vertices) slope += cur.residual[i] * delta[i];
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      const Eigen::VectorXd trial = u + alpha * delta;
      EnergyAssembly next;
      try {
        next = assemble(ctx, trial, cfg.p, eps, false);
      } catch (const NumericalFailure&) {
        alpha *= cfg.backtrack;
        continue;
      }
      const double dE = next.energy - cur.energy;
      const bool armijo = dE <= 1e-4 * alpha * slope;
      // Near convergence the decrease drops below the energy's rounding level; accept then
      // only if the residual still falls.
      const bool at_roundoff =
          std::abs(dE) <= 64.0 * std::numeric_limits<double>::epsilon() *
                              std::max(std::abs(cur.energy), std::abs(next.energy));
      if (armijo || (at_roundoff && free_norm(ctx, next.residual) < rn)) {
        u = trial;
        cur = assemble(ctx, u, cfg.p, eps, true);
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) throw ConvergenceError("line search stagnated", eps, step.residual_history);
  }
}

}  // namespace

EnergyAssembly assemble_energy_residual(const ScalarField& u, const TriMesh& mesh,
                                        const ConformalMetric& metric, double p, double eps,
                                        bool with_tangent) {
  check_field(mesh, u);
  if (!(p > 1.0)) throw ValidationError("assemble: p must be > 1");
  if (eps < 0.0) throw ValidationError("assemble: eps must be >= 0");
  const Context ctx(mesh, metric);
  return assemble(ctx, u.values, p, eps, with_tangent);
}

Solution solve(const TriMesh& mesh, const ConformalMetric& metric, const SolveConfig& config) {
  config.validate();
  if (mesh.num_triangles() == 0 || mesh.quadrature.size() != 3 * mesh.num_triangles())
    throw ValidationError("solve: mesh has no quadrature");
  const Context ctx(mesh, metric);
  const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nv);

  // p = 2 start: one Newton step from zero is exact.
  const EnergyAssembly zero = assemble(ctx, u, 2.0, 0.0, true);
  const double load_norm = free_norm(ctx, zero.residual);
  u = solve_free(ctx, zero.tangent, -zero.residual, 0.0);

  if (config.p != 2.0) {
    // Best multiple of the p = 2 field for the unregularized energy.
    double lin = 0.0, pw = 0.0;
    for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
      const auto& tri = mesh.triangles[t];
      const double g2 = ctx.grad(u, t).squaredNorm();
      for (int k = 0; k < 3; ++k) {
        const std::size_t qi = 3 * static_cast<std::size_t>(t) + k;
        const auto& q = mesh.quadrature[qi];
        const double uq = q.bary[0] * u[tri[0]] + q.bary[1] * u[tri[1]] + q.bary[2] * u[tri[2]];
        lin += q.weight * ctx.e2[qi] * uq;
        pw += q.weight * ctx.e2[qi] * std::pow(ctx.em2[qi] * g2, 0.5 * config.p);
      }
    }
    u *= std::pow(lin / pw, 1.0 / (config.p - 1.0));
  }

  const double eps0 = config.eps0 > 0.0 ? config.eps0 : 0.1 * max_frame_gradient(ctx, u);
  std::vector<double> ladder;
  for (double e = eps0; e > config.eps_min * (1.0 + 1e-12); e *= config.rho) ladder.push_back(e);
  ladder.push_back(config.eps_min);

  Solution sol;
  sol.load_norm = load_norm;
  for (double eps : ladder) sol.steps.push_back(newton(ctx, u, config, eps, load_norm));
  sol.final_eps = ladder.back();
  sol.u.values = u;

  sol.min_u = u.minCoeff();
  sol.max_u = u.maxCoeff();
  sol.interior_positive = true;
  for (int v : ctx.free_vertices) sol.interior_positive = sol.interior_positive && u[v] > 0.0;
  const double delta = std::max(1e-8, 1e-3 * mesh.h * max_frame_gradient(ctx, u));
  std::size_t masked = 0;
  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
    const double g2 = ctx.grad(u, t).squaredNorm();
    if (std::sqrt(ctx.em2[3 * t] * g2) <= delta) ++masked;
  }
  sol.masked_fraction = static_cast<double>(masked) / static_cast<double>(mesh.num_triangles());
  return sol;
}

double variational_boundary_flux(const TriMesh& mesh, const ConformalMetric& metric,
                                 const Solution& solution, double p) {
  const EnergyAssembly a =
      assemble_energy_residual(solution.u, mesh, metric, p, solution.final_eps, false);
  double total = 0.0;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.on_boundary[v]) total += a.residual[static_cast<Eigen::Index>(v)];
  return total;
}

std::vector<ConvergenceRow> convergence_study(const DomainSpec& spec,
                                              const ConformalMetric& metric,
                                              const SolveConfig& config,
                                              const std::vector<double>& h_list) {
  if (!std::holds_alternative<Disk>(spec))
    throw PreconditionError("convergence_study: an exact oracle exists only for disks");
  if (metric.kind() != ConformalMetric::Kind::kFlat &&
      metric.kind() != ConformalMetric::Kind::kConstant)
    throw PreconditionError("convergence_study: metric must be flat or constant");
  const double R = std::get<Disk>(spec).R;
  const double c = metric.kind() == ConformalMetric::Kind::kConstant ? metric.params().at(0) : 0.0;
  // phi = c rescales the source to e^{pc}, so u = e^{pc/(p-1)} u_flat.
  const double scale = std::exp(config.p * c / (config.p - 1.0));
  const RadialProfile exact = radial_exact(2, config.p, R);

  std::vector<ConvergenceRow> rows;
  for (double h : h_list) {
    const TriMesh mesh = build_mesh(spec, h);
    const Solution sol = solve(mesh, metric, config);
    ConvergenceRow row;
    row.h = h;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      const double e = sol.u.values[static_cast<Eigen::Index>(v)] -
                       scale * exact.u(std::min(mesh.vertices[v].norm(), R));
      row.linf_error = std::max(row.linf_error, std::abs(e));
    }
    double l2 = 0.0;
    for (const auto& q : mesh.quadrature) {
      const auto& tri = mesh.triangles[q.triangle];
      double uh = 0.0;
      for (int i = 0; i < 3; ++i) uh += q.bary[i] * sol.u.values[tri[i]];
      const double e = uh - scale * exact.u(std::min(q.x.norm(), R));
      l2 += q.weight * e * e;
    }
    row.l2_error = std::sqrt(l2);
    if (!rows.empty())
      row.observed_order = std::log(rows.back().l2_error / row.l2_error) / std::log(rows.back().h / h);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace plap
