#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace plap::detail {

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// > 0 when d lies strictly inside the circumcircle of the CCW triangle abc.
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

namespace {

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> nb;  // neighbour across the edge opposite v[i]
  bool alive = true;
};

class Triangulator {
 public:
  explicit Triangulator(std::vector<Vec2> pts) : pts_(std::move(pts)) {}

  void insert(int p) {
    const int start = locate(pts_[p]);
    cavity_.clear();
    stack_.clear();
    stack_.push_back(start);
    mark_[start] = stamp_;
    while (!stack_.empty()) {
      const int t = stack_.back();
      stack_.pop_back();
      cavity_.push_back(t);
      for (int i = 0; i < 3; ++i) {
        const int n = tris_[t].nb[i];
        if (n < 0 || mark_[n] == stamp_) continue;
        const auto& v = tris_[n].v;
        if (incircle(pts_[v[0]], pts_[v[1]], pts_[v[2]], pts_[p]) > 0.0) {
          mark_[n] = stamp_;
          stack_.push_back(n);
        }
      }
    }

    // Boundary edges of the cavity, each becomes a new triangle (a, b, p).
    edges_.clear();
    for (int t : cavity_) {
      for (int i = 0; i < 3; ++i) {
        const int n = tris_[t].nb[i];
        if (n >= 0 && mark_[n] == stamp_) continue;
        edges_.push_back({tris_[t].v[(i + 1) % 3], tris_[t].v[(i + 2) % 3], n, -1});
      }
    }
    for (int t : cavity_) {
      tris_[t].alive = false;
      free_.push_back(t);
    }
    for (auto& e : edges_) {
      const int nt = allocate();
      tris_[nt].v = {e.a, e.b, p};
      tris_[nt].nb = {-1, -1, e.outside};
      tris_[nt].alive = true;
      e.tri = nt;
      if (e.outside >= 0) {
        auto& o = tris_[e.outside];
        for (int i = 0; i < 3; ++i) {
          if (o.v[(i + 1) % 3] == e.b && o.v[(i + 2) % 3] == e.a) o.nb[i] = nt;
        }
      }
    }
    // Edge (b, p) of triangle (a, b, p) is opposite a and is shared with the new
    // triangle that starts at b.
    for (const auto& e : edges_) {
      for (const auto& f : edges_) {
        if (f.a == e.b) {
          tris_[e.tri].nb[0] = f.tri;
          tris_[f.tri].nb[1] = e.tri;
          break;
        }
      }
    }
    last_ = edges_.front().tri;
    ++stamp_;
  }

  std::vector<Tri> tris_;

  int add_triangle(int a, int b, int c) {
    tris_.push_back({{a, b, c}, {-1, -1, -1}, true});
    mark_.push_back(-1);
    return static_cast<int>(tris_.size()) - 1;
  }

 private:
  std::vector<Vec2> pts_;
  std::vector<int> free_;
  std::vector<int> mark_;
  std::vector<int> cavity_;
  std::vector<int> stack_;
  struct EdgeRec {
    int a, b, outside, tri;
  };
  std::vector<EdgeRec> edges_;
  int stamp_ = 0;
  int last_ = 0;

  int allocate() {
    if (!free_.empty()) {
      const int t = free_.back();
      free_.pop_back();
      return t;
    }
    tris_.push_back({});
    mark_.push_back(-1);
    return static_cast<int>(tris_.size()) - 1;
  }

  int locate(const Vec2& p) const {
    int t = last_;
    while (!tris_[t].alive) ++t;  // last_ is always alive; guard anyway
    for (std::size_t guard = 0; guard < 4 * tris_.size() + 16; ++guard) {
      const auto& tri = tris_[t];
      int next = -1;
      for (int i = 0; i < 3; ++i) {
        const int a = tri.v[(i + 1) % 3], b = tri.v[(i + 2) % 3];
        if (orient2d(pts_[a], pts_[b], p) < 0.0 && tri.nb[i] >= 0) {
          next = tri.nb[i];
          break;
        }
      }
      if (next < 0) return t;
      t = next;
    }
    // Walk failed to terminate; fall back to a scan.
    for (int k = 0; k < static_cast<int>(tris_.size()); ++k) {
      if (!tris_[k].alive) continue;
      const auto& v = tris_[k].v;
      if (orient2d(pts_[v[0]], pts_[v[1]], p) >= 0 && orient2d(pts_[v[1]], pts_[v[2]], p) >= 0 &&
          orient2d(pts_[v[2]], pts_[v[0]], p) >= 0)
        return k;
    }
    return t;
  }
};

}  // namespace

std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) return {};
  Vec2 lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 mid = 0.5 * (lo + hi);
  const double span = std::max((hi - lo).maxCoeff(), 1e-12);

  std::vector<Vec2> pts = points;
  pts.push_back(mid + Vec2(-100.0 * span, -100.0 * span));
  pts.push_back(mid + Vec2(100.0 * span, -100.0 * span));
  pts.push_back(mid + Vec2(0.0, 100.0 * span));

  // Insert along a snake-ordered grid so that the walk stays short.
  const int cells = std::max(1, static_cast<int>(std::sqrt(n / 4.0)));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto cell_key = [&](int i) {
    const auto cx = std::min(cells - 1, static_cast<int>((points[i].x() - lo.x()) / span * cells));
    const auto cy = std::min(cells - 1, static_cast<int>((points[i].y() - lo.y()) / span * cells));
    const int col = (cy % 2 == 0) ? cx : cells - 1 - cx;
    return static_cast<long>(cy) * cells + col;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return cell_key(a) < cell_key(b); });

  Triangulator tr(pts);
  tr.add_triangle(n, n + 1, n + 2);
  for (int i : order) tr.insert(i);

  std::vector<std::array<int, 3>> out;
  for (const auto& t : tr.tris_) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    out.push_back(t.v);
  }
  return out;
}

}  // namespace plap::detail
