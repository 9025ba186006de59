#include "plap/identities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>

#include "plap/analytic.hpp"
#include "plap/error.hpp"

namespace plap {
namespace {

double signed_power(double x, double q) {  // x |x|^{q-1}
  return std::copysign(std::pow(std::abs(x), q), x);
}

std::vector<int> masked_triangles(const DerivativeBundle& bundle) {
  std::vector<int> out;
  for (const auto& pt : bundle.points)
    if (pt.masked && (out.empty() || out.back() != pt.triangle)) out.push_back(pt.triangle);
  out.insert(out.end(), bundle.critical_triangles.begin(), bundle.critical_triangles.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Linear least-squares value at s = 0.
double extrapolate(const std::vector<double>& s, const std::vector<double>& v) {
  if (s.size() == 1) return v[0];
  Eigen::MatrixXd A(s.size(), 2);
  Eigen::VectorXd b(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    A(k, 0) = 1.0;
    A(k, 1) = s[k];
    b[k] = v[k];
  }
  return A.colPivHouseholderQr().solve(b)[0];
}

void require_positive_H(const BoundaryTrace& trace) {
  for (const auto& node : trace.nodes)
    if (!(node.H > 0.0))
      throw PreconditionError("mean curvature " + std::to_string(node.H) +
                              " <= 0 at boundary vertex " + std::to_string(node.vertex));
}

}  // namespace

double BoundaryTrace::perimeter() const {
  double s = 0.0;
  for (const auto& node : nodes) s += node.weight;
  return s;
}

void BoundaryTrace::finalize() {
  flagged_count = 0;
  max_boundary_pde_residual = 0.0;
  all_u_nu_negative = !nodes.empty();
  for (auto& node : nodes) {
    const double a = std::pow(std::abs(node.u_nu), p - 2.0);
    node.boundary_pde_residual = a * ((p - 1.0) * node.u_nunu + (n - 1) * node.H * node.u_nu) + 1.0;
    if (!(node.u_nu < 0.0)) all_u_nu_negative = false;
    if (node.flagged || !std::isfinite(node.boundary_pde_residual)) {
      ++flagged_count;
      continue;
    }
    max_boundary_pde_residual = std::max(max_boundary_pde_residual, std::abs(node.boundary_pde_residual));
  }
}

BoundaryTrace boundary_trace(const TriMesh& mesh, const DerivativeBundle& bundle,
                             const BoundaryGeometry& bg, const ConformalMetric& metric, double p,
                             const TraceOptions& options) {
  if (options.depths.empty()) throw ValidationError("trace depths must be non-empty");
  BoundaryTrace trace;
  trace.p = p;
  trace.n = 2;
  const std::vector<double> Hg = geodesic_boundary_curvature(metric, bg);
  const std::vector<char> excluded =
      triangle_neighborhood(mesh, masked_triangles(bundle), options.mask_rings);
  const PointLocator locator(mesh);
  const auto& grad = bundle.nodal.grad;
  const auto& hess = bundle.nodal.hess;

  trace.nodes.reserve(bg.nodes.size());
  for (std::size_t k = 0; k < bg.nodes.size(); ++k) {
    const BoundaryNode& b = bg.nodes[k];
    TraceNode node;
    node.vertex = b.vertex;
    node.loop = b.loop;
    node.s = b.s;
    node.x = b.x;
    node.normal = b.normal;
    node.H = Hg[k];
    const double e = metric.is_flat() ? 1.0 : std::exp(metric.phi(b.x));
    node.weight = b.weight * e;
    node.u_nu = grad[b.vertex].dot(b.normal) / e;

    // Extrapolate q = d/dnu (|grad u|^{p-2} <grad u, nu>), which is constant along radii
    // of a ball and reduces to (p-1)|u_nu|^{p-2} u_nunu on the boundary.
    std::vector<double> depth, value;
    for (double d : options.depths) {
      const Vec2 x = b.x - d * mesh.h * b.normal;
      const auto hit = locator.locate(x);
      if (!hit) {
        node.flagged = true;
        continue;
      }
      if (excluded[hit->triangle]) node.flagged = true;
      const auto& tri = mesh.triangles[hit->triangle];
      Vec2 g = Vec2::Zero();
      Mat2 H = Mat2::Zero();
      for (int i = 0; i < 3; ++i) {
        g += hit->bary[i] * grad[tri[i]];
        H += hit->bary[i] * hess[tri[i]];
      }
      // nu is a unit coordinate vector, so its frame components are nu itself.
      if (!metric.is_flat()) {
        const auto f = frame_derivs(metric, x, g, H);
        g = f.g;
        H = f.H;
      }
      const double s = g.norm();
      const Vec2 Hn = H * b.normal;
      const double q = std::pow(s, p - 2.0) * b.normal.dot(Hn) +
                       (p - 2.0) * std::pow(s, p - 4.0) * g.dot(Hn) * g.dot(b.normal);
      if (!std::isfinite(q)) {
        node.flagged = true;
        continue;
      }
      depth.push_back(d);
      value.push_back(q);
    }
    const double scale = (p - 1.0) * std::pow(std::abs(node.u_nu), p - 2.0);
    if (depth.empty() || !(scale > 0.0) || !std::isfinite(scale)) {
      node.flagged = true;
      const Mat2 M = metric.is_flat() ? hess[b.vertex]
                                      : frame_derivs(metric, b.x, grad[b.vertex], hess[b.vertex]).H;
      node.u_nunu = b.normal.dot(M * b.normal);
    } else {
      node.u_nunu = extrapolate(depth, value) / scale;
    }
    trace.nodes.push_back(node);
  }
  trace.finalize();
  return trace;
}

double relative_residual(double lhs, double rhs, double floor) {
  const double scale = std::max({std::abs(lhs), std::abs(rhs), floor});
  return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

IdentityEntry IdentityEntry::make(std::string name, double lhs, double rhs, double floor,
                                  double tolerance) {
  IdentityEntry e;
  e.name = std::move(name);
  e.lhs = lhs;
  e.rhs = rhs;
  e.residual = std::abs(lhs - rhs);
  e.relative = relative_residual(lhs, rhs, floor);
  e.tolerance = tolerance;
  e.pass = std::isfinite(e.relative) && e.relative <= tolerance;
  return e;
}

IdentityEntry flux_balance(const BoundaryTrace& trace, const DomainMeasures& measures,
                           double tolerance) {
  double flux = 0.0;
  for (const auto& node : trace.nodes) flux += signed_power(node.u_nu, trace.p - 1.0) * node.weight;
  IdentityEntry e;
  e.name = "flux_balance";
  e.lhs = flux;
  e.rhs = -measures.volume;
  e.residual = std::abs(flux + measures.volume);
  e.relative = e.residual / measures.volume;
  e.tolerance = tolerance;
  e.pass = std::isfinite(e.relative) && e.relative <= tolerance;
  return e;
}

double luP_integral(const DerivativeBundle& bundle, double p, int n) {
  const PointValues v = luP_pointwise(bundle, p, n);
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k]) s += *v[k] * bundle.points[k].dv;
  return s;
}

FundamentalReport fundamental_identity(const DerivativeBundle& bundle, const BoundaryTrace& trace,
                                       const DomainMeasures& measures, double tolerance) {
  const double p = trace.p;
  const int n = trace.n;
  const double c = (p - 1.0) * (n - 1);
  FundamentalReport r;
  r.luP_integral = luP_integral(bundle, p, n);
  r.lhs_volume = r.luP_integral / c;
  double boundary = 0.0, curvature = 0.0;
  for (const auto& node : trace.nodes) {
    const double a = std::pow(std::abs(node.u_nu), p - 2.0);
    boundary += a * node.u_nu * ((p - 1.0) * a * node.u_nunu + 1.0 / n) * node.weight;
    curvature += node.H * std::pow(std::abs(node.u_nu), 2.0 * p - 2.0) * node.weight;
  }
  r.lhs_boundary = (p - 1.0) * boundary / c;
  r.rhs = measures.volume / n - curvature;
  const double floor = measures.volume / n;
  r.volume_vs_rhs = IdentityEntry::make("volume_vs_rhs", r.lhs_volume, r.rhs, floor, tolerance);
  r.boundary_vs_rhs =
      IdentityEntry::make("boundary_vs_rhs", r.lhs_boundary, r.rhs, floor, tolerance);
  r.volume_vs_boundary =
      IdentityEntry::make("volume_vs_boundary", r.lhs_volume, r.lhs_boundary, floor, tolerance);
  r.masked_fraction = bundle.masked_fraction;
  r.pass = r.volume_vs_rhs.pass && r.boundary_vs_rhs.pass;
  return r;
}

HKReport hk_report(const DerivativeBundle& bundle, const BoundaryTrace& trace,
                   const DomainMeasures& measures, double tolerance, double hk_tolerance) {
  require_positive_H(trace);
  const double p = trace.p;
  const int n = trace.n;
  HKReport r;
  r.t1 = n * n * luP_integral(bundle, p, n) / ((p - 1.0) * (n - 1));
  for (const auto& node : trace.nodes) {
    const double q = 1.0 + n * node.H * signed_power(node.u_nu, p - 1.0);
    r.t2 += q * q / node.H * node.weight;
    r.inv_H_integral += node.weight / node.H;
  }
  r.t3 = r.inv_H_integral - n * measures.volume;
  const double floor = n * measures.volume;
  r.identity = IdentityEntry::make("hk_identity", r.t1 + r.t2, r.t3, floor, tolerance);
  r.hk_inequality = r.t3 >= -hk_tolerance * floor;
  r.pass = r.identity.pass && r.hk_inequality;
  return r;
}

SoapBubbleReport soap_bubble_report(const DerivativeBundle& bundle, const BoundaryTrace& trace,
                                    const DomainMeasures& measures, double tolerance) {
  const double p = trace.p;
  const int n = trace.n;
  SoapBubbleReport r;
  r.H0 = trace.perimeter() / (n * measures.volume);
  r.lhs1 = luP_integral(bundle, p, n) / ((p - 1.0) * (n - 1));
  for (const auto& node : trace.nodes) {
    const double q = n * signed_power(node.u_nu, p - 1.0) * r.H0 + 1.0;
    r.lhs2 += q * q * node.weight;
    r.rhs += (r.H0 - node.H) * std::pow(std::abs(node.u_nu), 2.0 * p - 2.0) * node.weight;
    r.max_H_deviation = std::max(r.max_H_deviation, std::abs(node.H - r.H0));
  }
  r.lhs2 /= n * n * r.H0;
  r.identity =
      IdentityEntry::make("soap_bubble", r.lhs1 + r.lhs2, r.rhs, measures.volume / n, tolerance);
  r.pass = r.identity.pass;
  return r;
}

SerrinReport serrin_deficit(const BoundaryTrace& trace) {
  require_positive_H(trace);
  SerrinReport r;
  r.nodal_residual.reserve(trace.nodes.size());
  for (const auto& node : trace.nodes) {
    const double q = trace.n * node.H * signed_power(node.u_nu, trace.p - 1.0) + 1.0;
    r.nodal_residual.push_back(q);
    r.deficit += q * q / node.H * node.weight;
    if (!node.flagged) r.max_nodal_residual = std::max(r.max_nodal_residual, std::abs(q));
  }
  return r;
}

double subharmonicity_tolerance(double p, int n, double /*h*/) { return 0.05 * (p - 1.0) / n; }

SubharmonicityScan subharmonicity_scan(const TriMesh& mesh, const DerivativeBundle& bundle,
                                       const ConformalMetric& metric, double p, int n,
                                       int mask_rings, int bins) {
  if (!metric.nonnegative_ricci())
    throw PreconditionError("subharmonicity scan requires a metric with Ric >= 0");
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  const std::vector<char> excluded =
      triangle_neighborhood(mesh, masked_triangles(bundle), mask_rings);
  const PointValues v = luP_pointwise(bundle, p, n);

  SubharmonicityScan s;
  s.tolerance = subharmonicity_tolerance(p, n, mesh.h);
  s.min_value = std::numeric_limits<double>::infinity();
  double max_value = -std::numeric_limits<double>::infinity();
  std::vector<double> kept;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k]) {
      ++s.excluded;
      continue;
    }
    s.integral += *v[k] * bundle.points[k].dv;
    if (excluded[bundle.points[k].triangle]) {
      ++s.excluded;
      continue;
    }
    kept.push_back(*v[k]);
    if (*v[k] < s.min_value) {
      s.min_value = *v[k];
      s.argmin = bundle.points[k].x;
    }
    max_value = std::max(max_value, *v[k]);
  }
  s.scanned = kept.size();
  if (kept.empty()) {
    s.min_value = 0.0;
    return s;
  }
  const double width = std::max(max_value - s.min_value, 1e-300) / bins;
  s.bin_edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) s.bin_edges[i] = s.min_value + i * width;
  s.bin_counts.assign(bins, 0);
  std::size_t within = 0;
  for (double x : kept) {
    if (std::abs(x) <= s.tolerance) ++within;
    const int i = std::min(bins - 1, static_cast<int>((x - s.min_value) / width));
    ++s.bin_counts[i];
  }
  s.fraction_within_tolerance = static_cast<double>(within) / kept.size();
  s.pass = s.min_value >= -s.tolerance;
  return s;
}

EquivalenceFlags equivalence_suite(const BoundaryTrace& trace, const DomainMeasures& measures,
                                   const ConformalMetric& metric, bool ball_domain,
                                   double tolerance) {
  if (!metric.is_flat()) throw PreconditionError("equivalence flags need the flat metric");
  const double p = trace.p;
  const int n = trace.n;
  EquivalenceFlags f;
  f.tolerance = tolerance;
  f.ball_domain = ball_domain;
  f.radial = ball_domain;
  const double H0 = trace.perimeter() / (n * measures.volume);
  f.E_value = std::pow(1.0 / (n * H0), 1.0 / (p - 1.0));
  for (const auto& node : trace.nodes) {
    f.D_deviation = std::max(f.D_deviation, std::abs(node.H - H0) / H0);
    if (node.flagged) continue;
    f.E_deviation = std::max(f.E_deviation, std::abs(std::abs(node.u_nu) - f.E_value) / f.E_value);
    const double q = n * node.H * signed_power(node.u_nu, p - 1.0) + 1.0;
    f.B_deviation = std::max(f.B_deviation, std::abs(q));
  }
  f.B = f.B_deviation <= tolerance;
  f.D = f.D_deviation <= tolerance;
  f.E = f.E_deviation <= tolerance;
  return f;
}

IdentityReport identity_suite(const TriMesh& mesh, const DerivativeBundle& bundle,
                              const BoundaryTrace& trace, const ConformalMetric& metric,
                              const DomainMeasures& measures, bool ball_domain,
                              const IdentityTolerances& tol) {
  IdentityReport r;
  r.p = trace.p;
  r.n = trace.n;
  r.h = mesh.h;
  r.volume = measures.volume;
  r.perimeter = trace.perimeter();
  r.H0 = r.perimeter / (r.n * r.volume);
  r.masked_fraction = bundle.masked_fraction;
  r.delta_crit = bundle.delta_crit;
  r.flux = flux_balance(trace, measures, tol.flux);
  r.fundamental = fundamental_identity(bundle, trace, measures, tol.fundamental);
  r.sbt = soap_bubble_report(bundle, trace, measures, tol.sbt);
  r.pass = r.flux.pass && r.fundamental.pass && r.sbt.pass;

  const bool positive_H = std::all_of(trace.nodes.begin(), trace.nodes.end(),
                                      [](const TraceNode& node) { return node.H > 0.0; });
  if (positive_H) {
    r.hk = hk_report(bundle, trace, measures, tol.hk, tol.hk_inequality);
    r.serrin = serrin_deficit(trace);
    r.pass = r.pass && r.hk->pass;
  } else {
    r.skipped.push_back("hk, serrin: boundary mean curvature is not positive");
  }
  if (metric.nonnegative_ricci())
    r.scan = subharmonicity_scan(mesh, bundle, metric, r.p, r.n);
  else
    r.skipped.push_back("subharmonicity: metric not flagged Ric >= 0");
  if (metric.is_flat() && positive_H)
    r.flags = equivalence_suite(trace, measures, metric, ball_domain, tol.equivalence);
  else
    r.skipped.push_back("equivalence flags: need a flat metric and positive curvature");
  return r;
}

void write_trace_csv(std::ostream& out, const BoundaryTrace& trace) {
  out.precision(17);
  out << "s,x,y,H,u_nu,u_nunu,boundary_pde_residual,flagged\n";
  for (const auto& node : trace.nodes)
    out << node.s << ',' << node.x.x() << ',' << node.x.y() << ',' << node.H << ',' << node.u_nu
        << ',' << node.u_nunu << ',' << node.boundary_pde_residual << ',' << (node.flagged ? 1 : 0)
        << '\n';
}

}  // namespace plap
