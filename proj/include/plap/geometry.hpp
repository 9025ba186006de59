#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace plap {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Disk {
  double R = 1.0;
};

struct Ellipse {
  double a = 1.0;  // semi-axis along x, a >= b
  double b = 1.0;
};

/// r(theta) = r0 + sum_k (cos_coeffs[k-1] cos(k theta) + sin_coeffs[k-1] sin(k theta)).
struct PolarStar {
  double r0 = 1.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;
};

struct Annulus {
  double R_in = 0.5;
  double R_out = 1.0;
};

using DomainSpec = std::variant<Disk, Ellipse, PolarStar, Annulus>;

std::string domain_kind(const DomainSpec& spec);
bool is_disk(const DomainSpec& spec);

/// Throws ValidationError naming the violated invariant.
void validate(const DomainSpec& spec);

/// Smallest enclosing diameter estimate (max |x - y| over boundary samples).
double diameter(const DomainSpec& spec);

/// One smooth closed boundary component, parametrized over t in [0, 2 pi)
/// and oriented so that the domain lies to its left.
class BoundaryCurve {
 public:
  enum class Shape { kEllipse, kPolarStar };

  static BoundaryCurve ellipse(double a, double b, bool clockwise = false);
  static BoundaryCurve polar_star(double r0, std::vector<double> cos_coeffs,
                                  std::vector<double> sin_coeffs);

  Vec2 point(double t) const;
  Vec2 d1(double t) const;
  Vec2 d2(double t) const;

  double speed(double t) const { return d1(t).norm(); }
  /// Outward unit normal (right of the tangent).
  Vec2 normal(double t) const;
  /// Mean curvature w.r.t. the outward normal; 1/R on a CCW circle, -1/R on a hole.
  double curvature(double t) const;

  double length() const;
  /// Parameter values of n points equally spaced in arc length, starting at t = 0.
  std::vector<double> equal_arclength_params(int n) const;

 private:
  Shape shape_ = Shape::kEllipse;
  double a_ = 1.0, b_ = 1.0;
  bool clockwise_ = false;
  double r0_ = 1.0;
  std::vector<double> cos_, sin_;

  double radius(double t, int derivative) const;
};

/// Boundary components of a spec; outer loop first.
std::vector<BoundaryCurve> boundary_curves(const DomainSpec& spec);

struct QuadraturePoint {
  Vec2 x;
  double weight = 0.0;
  int triangle = -1;
  std::array<double, 3> bary{};
};

struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  /// Closed vertex loops, domain on the left; loop 0 is the outer boundary.
  std::vector<std::vector<int>> boundary_loops;
  /// Curve parameter of each loop vertex, aligned with boundary_loops.
  std::vector<std::vector<double>> boundary_params;
  std::vector<char> on_boundary;
  std::vector<QuadraturePoint> quadrature;
  double h = 0.0;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  double triangle_area(int t) const;
  /// Vertex -> incident triangles.
  std::vector<std::vector<int>> vertex_triangles() const;
  /// Vertex -> adjacent vertices (sorted).
  std::vector<std::vector<int>> vertex_neighbors() const;
};

struct MeshOptions {
  double min_angle_deg = 20.0;
  int smoothing_iterations = 80;
  /// Mirror the point set about y = 0 before the final triangulation.
  bool symmetric_about_x_axis = false;
};

/// Triangulates the domain with target edge length h. Boundary vertices lie on the
/// parametric curves. Throws ValidationError / GenerationError.
TriMesh build_mesh(const DomainSpec& spec, double h, const MeshOptions& options = {});

/// Recomputes the 3-point interior quadrature rule of every triangle.
void rebuild_quadrature(TriMesh& mesh);

double min_angle_deg(const TriMesh& mesh);

/// Invariant check (positive areas, closed loops, angle bound); empty string when valid.
std::string check_mesh(const TriMesh& mesh, double min_angle_bound_deg);

struct BoundaryNode {
  int vertex = -1;
  int loop = 0;
  double t = 0.0;   // curve parameter
  double s = 0.0;   // arc length from loop start
  Vec2 x;
  Vec2 normal;      // outward unit normal
  double H = 0.0;   // mean curvature, sign from the outward normal
  double weight = 0.0;
};

struct BoundaryGeometry {
  std::vector<BoundaryNode> nodes;
  std::vector<double> loop_lengths;
};

BoundaryGeometry boundary_geometry(const DomainSpec& spec, const TriMesh& mesh);

class ConformalMetric;

struct DomainMeasures {
  double volume = 0.0;
  double perimeter = 0.0;
};

DomainMeasures domain_measures(const TriMesh& mesh, const BoundaryGeometry& bg,
                               const ConformalMetric& metric);

/// "x y" per vertex line, then "i j k" per triangle line (0-based); a header line
/// "<nv> <nt>" precedes them.
void write_mesh(std::ostream& out, const TriMesh& mesh);

}  // namespace plap
