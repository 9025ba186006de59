#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <tuple>
#include <type_traits>
#include <variant>

#include "plap/fields.hpp"
#include "plap/geometry.hpp"
#include "plap/identities.hpp"
#include "plap/metric.hpp"
#include "plap/solver.hpp"

namespace plap::testing {

struct Solved {
  TriMesh mesh;
  BoundaryGeometry bg;
  Solution solution;
  DomainMeasures measures;
  DerivativeBundle bundle;
  BoundaryTrace trace;
  ConformalMetric metric;
  double p = 2.0;
};

inline std::string describe(const DomainSpec& spec) {
  std::ostringstream s;
  s.precision(17);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Disk>) s << "disk " << d.R;
        if constexpr (std::is_same_v<T, Ellipse>) s << "ellipse " << d.a << ' ' << d.b;
        if constexpr (std::is_same_v<T, Annulus>) s << "annulus " << d.R_in << ' ' << d.R_out;
        if constexpr (std::is_same_v<T, PolarStar>) {
          s << "star " << d.r0;
          for (double c : d.cos_coeffs) s << " c" << c;
          for (double c : d.sin_coeffs) s << " s" << c;
        }
      },
      spec);
  return s.str();
}

/// Solve, recover and trace with default options; memoized per executable.
inline const Solved& solved(const DomainSpec& spec, double p, double h,
                            const ConformalMetric& metric = ConformalMetric::flat()) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<Solved>> cache;
  std::ostringstream key;
  key.precision(17);
  key << describe(spec) << '|' << p << '|' << h << '|' << metric.kind_name();
  for (double c : metric.params()) key << ' ' << c;
  std::lock_guard lock(mu);
  auto& slot = cache[key.str()];
  if (!slot) {
    auto s = std::make_unique<Solved>();
    s->metric = metric;
    s->p = p;
    s->mesh = build_mesh(spec, h);
    s->bg = boundary_geometry(spec, s->mesh);
    SolveConfig cfg;
    cfg.p = p;
    s->solution = solve(s->mesh, metric, cfg);
    s->measures = domain_measures(s->mesh, s->bg, metric);
    s->bundle = recover_derivatives(s->mesh, s->solution.u, metric);
    s->trace = boundary_trace(s->mesh, s->bundle, s->bg, metric, p);
    slot = std::move(s);
  }
  return *slot;
}

}  // namespace plap::testing
