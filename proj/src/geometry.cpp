#include "plap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "delaunay.hpp"
#include "plap/error.hpp"
#include "plap/metric.hpp"

namespace plap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// 5-point Gauss-Legendre on [-1, 1].
constexpr double kGLx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                            0.9061798459386640};
constexpr double kGLw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                            0.4786286704993665, 0.2369268850561891};

template <class F>
double gauss5(F&& f, double a, double b) {
  const double m = 0.5 * (a + b), r = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += kGLw[i] * f(m + r * kGLx[i]);
  return r * s;
}

struct Segment {
  Vec2 a, b;
};

// Even-odd point-in-polygon over all loops.
bool inside(const std::vector<Segment>& segs, const Vec2& p) {
  bool in = false;
  for (const auto& s : segs) {
    if ((s.a.y() > p.y()) != (s.b.y() > p.y())) {
      const double xc = s.a.x() + (p.y() - s.a.y()) / (s.b.y() - s.a.y()) * (s.b.x() - s.a.x());
      if (p.x() < xc) in = !in;
    }
  }
  return in;
}

// Distance to the polygon and the closest point on it.
double distance(const std::vector<Segment>& segs, const Vec2& p, Vec2* closest) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : segs) {
    const Vec2 d = s.b - s.a;
    const double t = std::clamp((p - s.a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    const Vec2 q = s.a + t * d;
    const double dist = (p - q).norm();
    if (dist < best) {
      best = dist;
      if (closest) *closest = q;
    }
  }
  return best;
}

double triangle_min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto angle = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const Vec2 u = q - p, v = r - p;
    return std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
  };
  return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)}) * 180.0 / std::numbers::pi;
}

}  // namespace

std::string domain_kind(const DomainSpec& spec) {
  return std::visit(overloaded{[](const Disk&) { return std::string("disk"); },
                               [](const Ellipse&) { return std::string("ellipse"); },
                               [](const PolarStar&) { return std::string("polar_star"); },
                               [](const Annulus&) { return std::string("annulus"); }},
                    spec);
}

bool is_disk(const DomainSpec& spec) {
  if (std::holds_alternative<Disk>(spec)) return true;
  if (const auto* e = std::get_if<Ellipse>(&spec)) return e->a == e->b;
  if (const auto* s = std::get_if<PolarStar>(&spec)) {
    for (double c : s->cos_coeffs)
      if (c != 0.0) return false;
    for (double c : s->sin_coeffs)
      if (c != 0.0) return false;
    return true;
  }
  return false;
}

void validate(const DomainSpec& spec) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError(std::string(what) + " must be strictly positive");
  };
  std::visit(overloaded{[&](const Disk& d) { positive(d.R, "disk.R"); },
                        [&](const Ellipse& e) {
                          positive(e.a, "ellipse.a");
                          positive(e.b, "ellipse.b");
                          if (e.a < e.b) throw ValidationError("ellipse requires a >= b");
                        },
                        [&](const PolarStar& s) {
                          positive(s.r0, "polar_star.r0");
                          const BoundaryCurve c =
                              BoundaryCurve::polar_star(s.r0, s.cos_coeffs, s.sin_coeffs);
                          const double r_min = 1e-3 * s.r0;
                          for (int k = 0; k < 4096; ++k) {
                            const double t = kTwoPi * k / 4096.0;
                            if (c.point(t).norm() < r_min)
                              throw ValidationError(
                                  "polar_star radius r(theta) must stay >= r_min > 0 "
                                  "(curve would self-intersect)");
                          }
                        },
                        [&](const Annulus& a) {
                          positive(a.R_in, "annulus.R_in");
                          positive(a.R_out, "annulus.R_out");
                          if (a.R_in >= a.R_out)
                            throw ValidationError("annulus requires R_in < R_out");
                        }},
             spec);
}

double diameter(const DomainSpec& spec) {
  const auto curves = boundary_curves(spec);
  std::vector<Vec2> pts;
  for (int k = 0; k < 256; ++k) pts.push_back(curves.front().point(kTwoPi * k / 256.0));
  double d = 0.0;
  for (const auto& p : pts)
    for (const auto& q : pts) d = std::max(d, (p - q).norm());
  return d;
}

// ---- BoundaryCurve --------------------------------------------------------

BoundaryCurve BoundaryCurve::ellipse(double a, double b, bool clockwise) {
  BoundaryCurve c;
  c.shape_ = Shape::kEllipse;
  c.a_ = a;
  c.b_ = b;
  c.clockwise_ = clockwise;
  return c;
}

BoundaryCurve BoundaryCurve::polar_star(double r0, std::vector<double> cos_coeffs,
                                        std::vector<double> sin_coeffs) {
  BoundaryCurve c;
  c.shape_ = Shape::kPolarStar;
  c.r0_ = r0;
  c.cos_ = std::move(cos_coeffs);
  c.sin_ = std::move(sin_coeffs);
  return c;
}

double BoundaryCurve::radius(double t, int derivative) const {
  double r = derivative == 0 ? r0_ : 0.0;
  auto term = [&](double coeff, int k, bool is_cos) {
    const double kt = k * t;
    const double kp = std::pow(static_cast<double>(k), derivative);
    // derivatives of cos/sin cycle with period 4
    const double c = std::cos(kt), s = std::sin(kt);
    double v = 0.0;
    switch (derivative % 4) {
      case 0: v = is_cos ? c : s; break;
      case 1: v = is_cos ? -s : c; break;
      case 2: v = is_cos ? -c : -s; break;
      case 3: v = is_cos ? s : -c; break;
    }
    return coeff * kp * v;
  };
  for (std::size_t k = 0; k < cos_.size(); ++k) r += term(cos_[k], static_cast<int>(k) + 1, true);
  for (std::size_t k = 0; k < sin_.size(); ++k) r += term(sin_[k], static_cast<int>(k) + 1, false);
  return r;
}

Vec2 BoundaryCurve::point(double t) const {
  if (shape_ == Shape::kEllipse) {
    const double s = clockwise_ ? -std::sin(t) : std::sin(t);
    return {a_ * std::cos(t), b_ * s};
  }
  const double r = radius(t, 0);
  return {r * std::cos(t), r * std::sin(t)};
}

Vec2 BoundaryCurve::d1(double t) const {
  if (shape_ == Shape::kEllipse) {
    const double c = clockwise_ ? -std::cos(t) : std::cos(t);
    return {-a_ * std::sin(t), b_ * c};
  }
  const double r = radius(t, 0), r1 = radius(t, 1);
  const double c = std::cos(t), s = std::sin(t);
  return {r1 * c - r * s, r1 * s + r * c};
}

Vec2 BoundaryCurve::d2(double t) const {
  if (shape_ == Shape::kEllipse) {
    const double s = clockwise_ ? std::sin(t) : -std::sin(t);
    return {-a_ * std::cos(t), b_ * s};
  }
  const double r = radius(t, 0), r1 = radius(t, 1), r2 = radius(t, 2);
  const double c = std::cos(t), s = std::sin(t);
  return {r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s};
}

Vec2 BoundaryCurve::normal(double t) const {
  const Vec2 d = d1(t);
  return Vec2(d.y(), -d.x()) / d.norm();
}

double BoundaryCurve::curvature(double t) const {
  const Vec2 d = d1(t);
  return -d2(t).dot(normal(t)) / d.squaredNorm();
}

double BoundaryCurve::length() const {
  // Periodic trapezoid rule: spectrally accurate for smooth closed curves.
  constexpr int kSamples = 4096;
  double s = 0.0;
  for (int k = 0; k < kSamples; ++k) s += speed(kTwoPi * k / kSamples);
  return s * kTwoPi / kSamples;
}

std::vector<double> BoundaryCurve::equal_arclength_params(int n) const {
  const int panels = std::max(256, 16 * n);
  const double dt = kTwoPi / panels;
  std::vector<double> cum(panels + 1, 0.0);
  auto sp = [this](double t) { return speed(t); };
  for (int i = 0; i < panels; ++i) cum[i + 1] = cum[i] + gauss5(sp, i * dt, (i + 1) * dt);
  const double total = cum.back();

  std::vector<double> ts(n);
  ts[0] = 0.0;
  for (int k = 1; k < n; ++k) {
    const double target = total * k / n;
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const int i = std::clamp(static_cast<int>(it - cum.begin()) - 1, 0, panels - 1);
    const double t0 = i * dt;
    double t = t0 + dt * (target - cum[i]) / (cum[i + 1] - cum[i]);
    for (int iter = 0; iter < 8; ++iter) {
      const double f = cum[i] + gauss5(sp, t0, t) - target;
      t -= f / speed(t);
    }
    ts[k] = t;
  }
  return ts;
}

std::vector<BoundaryCurve> boundary_curves(const DomainSpec& spec) {
  return std::visit(
      overloaded{
          [](const Disk& d) { return std::vector{BoundaryCurve::ellipse(d.R, d.R)}; },
          [](const Ellipse& e) { return std::vector{BoundaryCurve::ellipse(e.a, e.b)}; },
          [](const PolarStar& s) {
            return std::vector{BoundaryCurve::polar_star(s.r0, s.cos_coeffs, s.sin_coeffs)};
          },
          [](const Annulus& a) {
            return std::vector{BoundaryCurve::ellipse(a.R_out, a.R_out),
                               BoundaryCurve::ellipse(a.R_in, a.R_in, /*clockwise=*/true)};
          }},
      spec);
}

// ---- TriMesh ---------------------------------------------------------------

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  return 0.5 * detail::orient2d(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
}

std::vector<std::vector<int>> TriMesh::vertex_triangles() const {
  std::vector<std::vector<int>> out(vertices.size());
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t)
    for (int v : triangles[t]) out[v].push_back(t);
  return out;
}

std::vector<std::vector<int>> TriMesh::vertex_neighbors() const {
  std::vector<std::vector<int>> out(vertices.size());
  for (const auto& tri : triangles) {
    for (int i = 0; i < 3; ++i) {
      out[tri[i]].push_back(tri[(i + 1) % 3]);
      out[tri[i]].push_back(tri[(i + 2) % 3]);
    }
  }
  for (auto& n : out) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return out;
}

void rebuild_quadrature(TriMesh& mesh) {
  mesh.quadrature.clear();
  mesh.quadrature.reserve(3 * mesh.triangles.size());
  constexpr double kA = 2.0 / 3.0, kB = 1.0 / 6.0;
  const std::array<std::array<double, 3>, 3> bary = {{{kA, kB, kB}, {kB, kA, kB}, {kB, kB, kA}}};
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    for (const auto& b : bary) {
      QuadraturePoint q;
      q.x = b[0] * mesh.vertices[tri[0]] + b[1] * mesh.vertices[tri[1]] +
            b[2] * mesh.vertices[tri[2]];
      q.weight = area / 3.0;
      q.triangle = t;
      q.bary = b;
      mesh.quadrature.push_back(q);
    }
  }
}

double min_angle_deg(const TriMesh& mesh) {
  double m = 180.0;
  for (const auto& t : mesh.triangles)
    m = std::min(m, triangle_min_angle(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                       mesh.vertices[t[2]]));
  return m;
}

std::string check_mesh(const TriMesh& mesh, double min_angle_bound_deg) {
  std::ostringstream err;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    if (!(mesh.triangle_area(t) > 0.0)) {
      err << "triangle " << t << " has nonpositive signed area";
      return err.str();
    }
  }
  std::set<std::pair<int, int>> directed;
  for (const auto& t : mesh.triangles)
    for (int i = 0; i < 3; ++i) directed.insert({t[i], t[(i + 1) % 3]});
  for (std::size_t l = 0; l < mesh.boundary_loops.size(); ++l) {
    const auto& loop = mesh.boundary_loops[l];
    if (loop.size() < 3) return "boundary loop with fewer than 3 vertices";
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i], b = loop[(i + 1) % loop.size()];
      if (!directed.count({a, b})) {
        err << "boundary loop " << l << " edge (" << a << "," << b
            << ") missing or not traversed with the domain on the left";
        return err.str();
      }
    }
  }
  const double angle = min_angle_deg(mesh);
  if (angle < min_angle_bound_deg) {
    err << "minimum angle " << angle << " deg below bound " << min_angle_bound_deg;
    return err.str();
  }
  return {};
}

TriMesh build_mesh(const DomainSpec& spec, double h, const MeshOptions& options) {
  validate(spec);
  const double diam = diameter(spec);
  if (!(h > 0.0) || !(h < diam / 4.0))
    throw ValidationError("target edge length h must satisfy 0 < h < diameter/4");

  const auto curves = boundary_curves(spec);
  TriMesh mesh;
  mesh.h = h;
  std::vector<Vec2> boundary_pts;
  std::vector<Segment> segs;
  for (std::size_t l = 0; l < curves.size(); ++l) {
    const auto& c = curves[l];
    int n = std::max(12, static_cast<int>(std::ceil(c.length() / h)));
    if (options.symmetric_about_x_axis && n % 2) ++n;
    auto ts = c.equal_arclength_params(n);
    std::vector<int> loop;
    const int first = static_cast<int>(boundary_pts.size());
    for (int k = 0; k < n; ++k) {
      Vec2 x = c.point(ts[k]);
      if (options.symmetric_about_x_axis) {
        // mirror exactly so the node set is reflection invariant
        if (k == 0 || 2 * k == n) x.y() = 0.0;
        if (2 * k > n) {
          const Vec2 m = c.point(ts[n - k]);
          x = Vec2(m.x(), -m.y());
          ts[k] = kTwoPi - ts[n - k];
        }
      }
      loop.push_back(first + k);
      boundary_pts.push_back(x);
    }
    for (int k = 0; k < n; ++k)
      segs.push_back({boundary_pts[first + k], boundary_pts[first + (k + 1) % n]});
    mesh.boundary_loops.push_back(std::move(loop));
    mesh.boundary_params.push_back(std::move(ts));
  }
  const int nb = static_cast<int>(boundary_pts.size());
  const double keep_off = 0.525 * h;

  // Hexagonal seed lattice.
  Vec2 lo = boundary_pts.front(), hi = boundary_pts.front();
  for (const auto& p : boundary_pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::vector<Vec2> interior;
  const double dy = h * std::sqrt(3.0) / 2.0;
  int row = 0;
  for (double y = lo.y() + 0.5 * dy; y < hi.y(); y += dy, ++row) {
    for (double x = lo.x() + (row % 2 ? 0.5 * h : 0.0); x < hi.x(); x += h) {
      const Vec2 p(x, y);
      if (inside(segs, p) && distance(segs, p, nullptr) >= keep_off) interior.push_back(p);
    }
  }

  auto assemble_points = [&]() {
    std::vector<Vec2> pts = boundary_pts;
    pts.insert(pts.end(), interior.begin(), interior.end());
    return pts;
  };
  auto triangulate = [&](const std::vector<Vec2>& pts) {
    auto tris = detail::delaunay(pts);
    std::vector<std::array<int, 3>> kept;
    kept.reserve(tris.size());
    for (const auto& t : tris) {
      const Vec2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
      if (inside(segs, c)) kept.push_back(t);
    }
    return kept;
  };

  // Spring smoothing with fixed boundary nodes.
  constexpr double kFscale = 1.2, kDt = 0.2;
  for (int iter = 0; iter < options.smoothing_iterations && !interior.empty(); ++iter) {
    const auto pts = assemble_points();
    const auto tris = triangulate(pts);
    std::set<std::pair<int, int>> bars;
    for (const auto& t : tris)
      for (int i = 0; i < 3; ++i) {
        int a = t[i], b = t[(i + 1) % 3];
        if (a > b) std::swap(a, b);
        bars.insert({a, b});
      }
    double sum_l2 = 0.0;
    for (const auto& [a, b] : bars) sum_l2 += (pts[a] - pts[b]).squaredNorm();
    const double l0 = kFscale * std::sqrt(sum_l2 / static_cast<double>(bars.size()));
    std::vector<Vec2> force(pts.size(), Vec2::Zero());
    for (const auto& [a, b] : bars) {
      const Vec2 d = pts[a] - pts[b];
      const double len = d.norm();
      const double f = std::max(l0 - len, 0.0);
      const Vec2 fv = f * d / len;
      force[a] += fv;
      force[b] -= fv;
    }
    double max_move = 0.0;
    for (std::size_t i = 0; i < interior.size(); ++i) {
      Vec2 p = interior[i] + kDt * force[nb + i];
      Vec2 q;
      const double dist = distance(segs, p, &q);
      const bool in = inside(segs, p);
      if (!in || dist < keep_off) {
        Vec2 dir = p - q;
        if (!in) dir = -dir;
        if (dir.norm() < 1e-14 * h) dir = interior[i] - q;
        p = q + keep_off * dir.normalized();
      }
      max_move = std::max(max_move, (p - interior[i]).norm());
      interior[i] = p;
    }
    if (iter > 10 && max_move < 1e-3 * h) break;
  }

  if (options.symmetric_about_x_axis) {
    std::vector<Vec2> sym;
    for (const auto& p : interior) {
      if (p.y() > 0.25 * h) {
        sym.push_back(p);
        sym.emplace_back(p.x(), -p.y());
      } else if (std::abs(p.y()) <= 0.25 * h) {
        const Vec2 a(p.x(), 0.0);
        bool dup = false;
        for (const auto& s : sym)
          if ((s - a).norm() < 0.3 * h) dup = true;
        if (!dup) sym.push_back(a);
      }
    }
    interior = std::move(sym);
  }

  mesh.vertices = assemble_points();
  mesh.triangles = triangulate(mesh.vertices);

  // Drop interior vertices that ended up unused.
  std::vector<int> used(mesh.vertices.size(), 0);
  for (const auto& t : mesh.triangles)
    for (int v : t) used[v] = 1;
  std::vector<int> remap(mesh.vertices.size(), -1);
  std::vector<Vec2> verts;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (used[i] || static_cast<int>(i) < nb) {
      remap[i] = static_cast<int>(verts.size());
      verts.push_back(mesh.vertices[i]);
    }
  }
  mesh.vertices = std::move(verts);
  for (auto& t : mesh.triangles)
    for (int& v : t) v = remap[v];

  mesh.on_boundary.assign(mesh.vertices.size(), 0);
  for (int i = 0; i < nb; ++i) mesh.on_boundary[i] = 1;
  rebuild_quadrature(mesh);

  const std::string problem = check_mesh(mesh, options.min_angle_deg);
  if (!problem.empty()) {
    throw GenerationError("mesh generation failed: " + problem, min_angle_deg(mesh));
  }
  return mesh;
}

// ---- Boundary geometry and measures -----------------------------------------

BoundaryGeometry boundary_geometry(const DomainSpec& spec, const TriMesh& mesh) {
  const auto curves = boundary_curves(spec);
  if (curves.size() != mesh.boundary_loops.size())
    throw ValidationError("boundary_geometry: mesh was not generated from this spec");
  BoundaryGeometry bg;
  for (std::size_t l = 0; l < curves.size(); ++l) {
    const auto& c = curves[l];
    const auto& loop = mesh.boundary_loops[l];
    const double length = c.length();
    const double w = length / static_cast<double>(loop.size());
    bg.loop_lengths.push_back(length);
    for (std::size_t k = 0; k < loop.size(); ++k) {
      BoundaryNode node;
      node.vertex = loop[k];
      node.loop = static_cast<int>(l);
      node.t = mesh.boundary_params[l][k];
      node.s = w * static_cast<double>(k);
      node.x = mesh.vertices[loop[k]];
      node.normal = c.normal(node.t);
      node.H = c.curvature(node.t);
      node.weight = w;
      bg.nodes.push_back(node);
    }
  }
  return bg;
}

DomainMeasures domain_measures(const TriMesh& mesh, const BoundaryGeometry& bg,
                               const ConformalMetric& metric) {
  DomainMeasures m;
  for (const auto& q : mesh.quadrature) m.volume += q.weight * std::exp(2.0 * metric.phi(q.x));
  for (const auto& n : bg.nodes) m.perimeter += n.weight * std::exp(metric.phi(n.x));
  return m;
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out.precision(17);
  out << mesh.vertices.size() << ' ' << mesh.triangles.size() << '\n';
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace plap
