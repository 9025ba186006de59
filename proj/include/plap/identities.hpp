#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plap/fields.hpp"
#include "plap/geometry.hpp"
#include "plap/metric.hpp"
#include "plap/solver.hpp"

namespace plap {

struct TraceNode {
  int vertex = -1;
  int loop = 0;
  double s = 0.0;
  Vec2 x;
  Vec2 normal;
  double H = 0.0;       // H, or H_g for a non-flat metric
  double weight = 0.0;  // ds, or ds_g
  double u_nu = 0.0;
  double u_nunu = 0.0;
  double boundary_pde_residual = 0.0;  // |u_nu|^{p-2}((p-1)u_nunu + (n-1)H u_nu) + 1
  bool flagged = false;        // excluded from pointwise statistics
};

struct BoundaryTrace {
  double p = 2.0;
  int n = 2;
  std::vector<TraceNode> nodes;
  int flagged_count = 0;
  double max_boundary_pde_residual = 0.0;  // over unflagged nodes
  bool all_u_nu_negative = false;

  double perimeter() const;
  /// Recomputes residuals and summary statistics after node edits.
  void finalize();
};

struct TraceOptions {
  /// Sample depths along the inward normal, in units of the mesh size. The normal
  /// derivative of the p-flux at these points is extrapolated linearly to the boundary.
  std::vector<double> depths{3.0, 4.0, 5.0};
  /// Rings around masked/critical triangles that disqualify a sample point.
  int mask_rings = 2;
};

/// u_nu from the recovered gradient at the boundary vertex; u_nunu from interior samples
/// of d/dnu(|grad u|^{p-2} <grad u, nu>) extrapolated along the inward normal.
BoundaryTrace boundary_trace(const TriMesh& mesh, const DerivativeBundle& bundle,
                             const BoundaryGeometry& bg, const ConformalMetric& metric, double p,
                             const TraceOptions& options = {});

/// |L - R| / max(|L|, |R|, floor).
double relative_residual(double lhs, double rhs, double floor);

struct IdentityEntry {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // |lhs - rhs|
  double relative = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  static IdentityEntry make(std::string name, double lhs, double rhs, double floor,
                            double tolerance);
};

/// Integral of u_nu|u_nu|^{p-2} against -|Omega|; relative to |Omega|.
IdentityEntry flux_balance(const BoundaryTrace& trace, const DomainMeasures& measures,
                           double tolerance = 0.01);

struct FundamentalReport {
  double lhs_volume = 0.0;
  double lhs_boundary = 0.0;
  double rhs = 0.0;
  double luP_integral = 0.0;
  IdentityEntry volume_vs_rhs, boundary_vs_rhs, volume_vs_boundary;
  double masked_fraction = 0.0;
  bool pass = false;
};

/// Integral of L_u P over unmasked quadrature points, weighted by dv_g.
double luP_integral(const DerivativeBundle& bundle, double p, int n);

FundamentalReport fundamental_identity(const DerivativeBundle& bundle, const BoundaryTrace& trace,
                                       const DomainMeasures& measures, double tolerance = 0.02);

struct HKReport {
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  double inv_H_integral = 0.0;
  IdentityEntry identity;  // t1 + t2 against t3
  bool hk_inequality = false;  // t3 >= -hk_tolerance * n|Omega|
  bool pass = false;
};

/// Throws PreconditionError naming the first node with H <= 0.
HKReport hk_report(const DerivativeBundle& bundle, const BoundaryTrace& trace,
                   const DomainMeasures& measures, double tolerance = 0.02,
                   double hk_tolerance = 1e-3);

struct SoapBubbleReport {
  double lhs1 = 0.0, lhs2 = 0.0, rhs = 0.0;
  double H0 = 0.0;
  double max_H_deviation = 0.0;
  IdentityEntry identity;  // lhs1 + lhs2 against rhs
  bool pass = false;
};

SoapBubbleReport soap_bubble_report(const DerivativeBundle& bundle, const BoundaryTrace& trace,
                                    const DomainMeasures& measures, double tolerance = 0.02);

struct SerrinReport {
  double deficit = 0.0;
  std::vector<double> nodal_residual;  // n H u_nu|u_nu|^{p-2} + 1
  double max_nodal_residual = 0.0;     // over unflagged nodes
};

/// Throws PreconditionError on H <= 0.
SerrinReport serrin_deficit(const BoundaryTrace& trace);

struct SubharmonicityScan {
  double min_value = 0.0;
  Vec2 argmin = Vec2::Zero();
  double tolerance = 0.0;
  bool pass = false;
  double integral = 0.0;  // over all unmasked points
  std::size_t scanned = 0;
  std::size_t excluded = 0;
  double fraction_within_tolerance = 0.0;  // scanned points with |L_u P| <= tolerance
  std::vector<double> bin_edges;
  std::vector<std::size_t> bin_counts;
};

/// tol_scan = 0.05 (p - 1)/n. The largest recovery error on the disk (where L_u P = 0)
/// sits in the boundary layer and does not shrink with h, so h is accepted but unused.
double subharmonicity_tolerance(double p, int n, double h);

/// Throws PreconditionError unless the metric has Ric >= 0.
SubharmonicityScan subharmonicity_scan(const TriMesh& mesh, const DerivativeBundle& bundle,
                                       const ConformalMetric& metric, double p, int n = 2,
                                       int mask_rings = 2, int bins = 40);

struct EquivalenceFlags {
  bool ball_domain = false;  // (A), metadata
  bool radial = false;       // (C), metadata
  bool B = false;            // overdetermined condition
  bool D = false;            // H = H0
  bool E = false;            // |grad u| constant on the boundary
  double B_deviation = 0.0;
  double D_deviation = 0.0;  // max |H - H0| / H0
  double E_value = 0.0;      // (1/(n H0))^{1/(p-1)}
  double E_deviation = 0.0;  // max ||u_nu| - E| / E
  double tolerance = 0.03;
};

/// Throws PreconditionError for a non-flat metric.
EquivalenceFlags equivalence_suite(const BoundaryTrace& trace, const DomainMeasures& measures,
                                   const ConformalMetric& metric, bool ball_domain,
                                   double tolerance = 0.03);

struct IdentityTolerances {
  double flux = 0.01;
  double fundamental = 0.02;
  double hk = 0.02;
  double sbt = 0.02;
  double equivalence = 0.03;
  double hk_inequality = 1e-3;
};

/// Everything computed for one solved case.
struct IdentityReport {
  double p = 2.0;
  int n = 2;
  double h = 0.0;
  double volume = 0.0;
  double perimeter = 0.0;
  double H0 = 0.0;
  double masked_fraction = 0.0;
  double delta_crit = 0.0;
  IdentityEntry flux;
  FundamentalReport fundamental;
  std::optional<HKReport> hk;
  SoapBubbleReport sbt;
  std::optional<SerrinReport> serrin;
  std::optional<SubharmonicityScan> scan;
  std::optional<EquivalenceFlags> flags;
  std::vector<std::string> skipped;  // checks not applicable, with reasons
  bool pass = false;
};

/// "s,x,y,H,u_nu,u_nunu,boundary_pde_residual,flagged" per node.
void write_trace_csv(std::ostream& out, const BoundaryTrace& trace);

IdentityReport identity_suite(const TriMesh& mesh, const DerivativeBundle& bundle,
                              const BoundaryTrace& trace, const ConformalMetric& metric,
                              const DomainMeasures& measures, bool ball_domain,
                              const IdentityTolerances& tol = {});

}  // namespace plap
