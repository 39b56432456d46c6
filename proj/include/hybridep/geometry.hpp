#pragma once

// Points, feasible sets, halfspaces and metric projections onto them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hybridep/error.hpp"

namespace hybridep {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Normals shorter than this are treated as zero.
inline constexpr double kDegenerateNormal = 1e-14;
/// A zero-normal cut with offset below this describes the empty set.
inline constexpr double kDegenerateOffset = -1e-12;

inline bool all_finite(const Point& x) { return x.allFinite(); }

inline void require_same_dimension(const Point& a, const Point& b, const char* where) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << where << ": dimension " << a.size() << " vs " << b.size();
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
}

/// The halfspace {z : <normal, z> <= offset}.
struct HalfspaceCut {
  Point normal;
  double offset = 0.0;
  bool degenerate = false;

  static HalfspaceCut make(Point normal, double offset) {
    HalfspaceCut cut{std::move(normal), offset, false};
    cut.degenerate = cut.normal.norm() < kDegenerateNormal;
    return cut;
  }

  Index dimension() const { return normal.size(); }
  bool whole_space() const { return degenerate && offset >= kDegenerateOffset; }
  bool empty() const { return degenerate && offset < kDegenerateOffset; }

  /// Signed violation <a, z> - b; positive means z lies outside.
  double violation(const Point& z) const { return normal.dot(z) - offset; }
};

struct Box {
  Point lower;
  Point upper;
};

struct Ball {
  Point center;
  double radius = 1.0;
};

struct Polyhedron {
  std::vector<HalfspaceCut> cuts;
  Index dimension = 0;
};

struct WholeSpace {
  Index dimension = 0;
};

/// Closed convex set C with an exact (or tolerance-controlled) projection.
struct FeasibleSet {
  std::variant<Box, Ball, Polyhedron, WholeSpace> shape;

  static FeasibleSet box(Point lower, Point upper) {
    require_same_dimension(lower, upper, "box bounds");
    if (!all_finite(lower) || !all_finite(upper))
      throw Error(ErrorCode::SchemaError, "box bounds must be finite");
    if ((lower.array() > upper.array()).any())
      throw Error(ErrorCode::SchemaError, "box requires lower <= upper componentwise");
    return FeasibleSet{Box{std::move(lower), std::move(upper)}};
  }

  static FeasibleSet ball(Point center, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw Error(ErrorCode::SchemaError, "ball radius must be positive");
    return FeasibleSet{Ball{std::move(center), radius}};
  }

  static FeasibleSet polyhedron(std::vector<HalfspaceCut> cuts, Index dimension) {
    for (const auto& c : cuts) {
      if (c.dimension() != dimension)
        throw Error(ErrorCode::DimensionMismatch, "polyhedron cut dimension");
    }
    return FeasibleSet{Polyhedron{std::move(cuts), dimension}};
  }

  static FeasibleSet whole_space(Index dimension) { return FeasibleSet{WholeSpace{dimension}}; }

  Index dimension() const {
    return std::visit(
        [](const auto& s) -> Index {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Box>) return s.lower.size();
          else if constexpr (std::is_same_v<S, Ball>) return s.center.size();
          else return s.dimension;
        },
        shape);
  }

  bool is_box() const { return std::holds_alternative<Box>(shape); }
  bool is_whole_space() const { return std::holds_alternative<WholeSpace>(shape); }
};

// ---------------------------------------------------------------------------
// Halfspaces
// ---------------------------------------------------------------------------

inline double feasibility_scale(const HalfspaceCut& cut, const Point& z) {
  return 1.0 + std::abs(cut.offset) + cut.normal.norm() * z.norm();
}

inline bool satisfies(const HalfspaceCut& cut, const Point& z, double rel_tol = 1e-12) {
  if (cut.whole_space()) return true;
  if (cut.empty()) return false;
  return cut.violation(z) <= rel_tol * feasibility_scale(cut, z);
}

inline Point project_halfspace(const HalfspaceCut& cut, const Point& x) {
  require_same_dimension(cut.normal, x, "project_halfspace");
  if (cut.empty()) throw Error(ErrorCode::DegenerateCut, "zero normal with negative offset");
  if (cut.whole_space()) return x;
  const double v = cut.violation(x);
  if (v <= 0.0) return x;
  return x - (v / cut.normal.squaredNorm()) * cut.normal;
}

/// Exact projection of x0 onto the intersection of two halfspaces by KKT case analysis.
inline Point project_two_halfspaces(const HalfspaceCut& c1, const HalfspaceCut& c2,
                                    const Point& x0) {
  require_same_dimension(c1.normal, x0, "project_two_halfspaces");
  require_same_dimension(c2.normal, x0, "project_two_halfspaces");
  if (c1.empty() || c2.empty())
    throw Error(ErrorCode::DegenerateCut, "zero normal with negative offset");
  if (c1.whole_space()) return project_halfspace(c2, x0);
  if (c2.whole_space()) return project_halfspace(c1, x0);

  const double v1 = c1.violation(x0);
  const double v2 = c2.violation(x0);
  if (v1 <= 0.0 && v2 <= 0.0) return x0;

  // One constraint active, the other inactive at the single-cut projection.
  Point p1, p2;
  if (v1 > 0.0) {
    p1 = x0 - (v1 / c1.normal.squaredNorm()) * c1.normal;
    if (satisfies(c2, p1)) return p1;
  }
  if (v2 > 0.0) {
    p2 = x0 - (v2 / c2.normal.squaredNorm()) * c2.normal;
    if (satisfies(c1, p2)) return p2;
  }

  // Both active: z = x0 - mu1 a1 - mu2 a2 with G mu = (v1, v2), mu >= 0.
  const double g11 = c1.normal.squaredNorm();
  const double g22 = c2.normal.squaredNorm();
  const double g12 = c1.normal.dot(c2.normal);
  const double det = g11 * g22 - g12 * g12;
  if (det > 1e-13 * g11 * g22) {
    const double mu1 = (g22 * v1 - g12 * v2) / det;
    const double mu2 = (g11 * v2 - g12 * v1) / det;
    const double floor = -1e-10 * (1.0 + std::abs(mu1) + std::abs(mu2));
    if (mu1 >= floor && mu2 >= floor) {
      return x0 - std::max(mu1, 0.0) * c1.normal - std::max(mu2, 0.0) * c2.normal;
    }
  }

  // Parallel (or nearly parallel) normals: the answer is a single-cut projection
  // unless the intersection is empty; accept the least violating candidate.
  double best = std::numeric_limits<double>::infinity();
  Point best_point;
  for (const Point* p : {&p1, &p2}) {
    if (p->size() == 0) continue;
    const double worst = std::max(c1.violation(*p) / feasibility_scale(c1, *p),
                                  c2.violation(*p) / feasibility_scale(c2, *p));
    if (worst < best) {
      best = worst;
      best_point = *p;
    }
  }
  if (best <= 1e-9) return best_point;
  throw Error(ErrorCode::EmptyIntersection, "no nonnegative multiplier pair and no single-cut case");
}

// ---------------------------------------------------------------------------
// Dykstra's alternating projections
// ---------------------------------------------------------------------------

struct DykstraResult {
  Point point;
  int cycles = 0;
  bool converged = false;
  /// Largest distance from the final point to any of the sets.
  double max_violation = 0.0;
  std::vector<double> violations;
};

/// Dykstra's method over projectors P_1..P_m, each a callable Point -> Point.
/// Stops when one full cycle moves neither the iterate nor the correction
/// terms by more than tol and the iterate lies within tol of every set.
template <typename Projector>
DykstraResult dykstra(const std::vector<Projector>& projectors, const Point& x0, double tol,
                      int max_cycles) {
  DykstraResult out;
  const std::size_t m = projectors.size();
  Point x = x0;
  std::vector<Point> corrections(m, Point::Zero(x0.size()));
  Point y(x0.size());
  Point start(x0.size());

  auto distances = [&](const Point& z) {
    std::vector<double> d(m);
    for (std::size_t i = 0; i < m; ++i) d[i] = (projectors[i](z) - z).norm();
    return d;
  };

  for (int cycle = 1; cycle <= max_cycles; ++cycle) {
    start = x;
    double correction_change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      y = x + corrections[i];
      Point next = projectors[i](y);
      Point new_correction = y - next;
      correction_change += (new_correction - corrections[i]).norm();
      corrections[i] = std::move(new_correction);
      x = std::move(next);
    }
    out.cycles = cycle;
    if ((x - start).norm() <= tol && correction_change <= tol) {
      out.violations = distances(x);
      out.max_violation = *std::max_element(out.violations.begin(), out.violations.end());
      if (out.max_violation <= tol) {
        out.converged = true;
        out.point = std::move(x);
        return out;
      }
    }
  }
  out.violations = distances(x);
  out.max_violation =
      out.violations.empty() ? 0.0 : *std::max_element(out.violations.begin(), out.violations.end());
  out.point = std::move(x);
  return out;
}

inline constexpr double kDefaultInnerTol = 1e-12;
inline constexpr int kDefaultInnerCycles = 10000;

/// Exact projection onto {z : <a_i, z> <= b_i} by a dual active-set method
/// (Goldfarb-Idnani with identity Hessian). Keeps z = x0 - sum u_i a_i with
/// u >= 0 over a working set, adds the most violated cut, and drops working
/// cuts whose multiplier reaches zero; dependent normals are handled by
/// dropping. Returns nothing on a detected empty intersection or stall, so
/// callers can fall back to Dykstra.
inline std::optional<Point> project_polyhedron_active_set(const std::vector<HalfspaceCut>& cuts,
                                                          const Point& x0) {
  const std::size_t m = cuts.size();
  const Index d = x0.size();
  Point z = x0;
  std::vector<std::size_t> work;
  std::vector<double> u;

  // Signed distance outside cut i, relative to the magnitudes that feed rounding.
  const double anchor = x0.norm();
  auto relative_violation = [&](std::size_t i) {
    const double na = cuts[i].normal.norm();
    const double scale = anchor + std::abs(cuts[i].offset) / na;
    return cuts[i].violation(z) / na / std::max(scale, std::numeric_limits<double>::min());
  };

  const int max_steps = static_cast<int>(20 * (m + static_cast<std::size_t>(d)) + 100);
  int steps = 0;
  for (;;) {
    std::size_t p = m;
    double worst = 1e-15;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      const double v = relative_violation(i);
      if (v > worst) {
        worst = v;
        p = i;
      }
    }
    if (p == m) break;

    const Point& ap = cuts[p].normal;
    double up = 0.0;
    for (;;) {
      if (++steps > max_steps) return std::nullopt;
      Point r = Point::Zero(static_cast<Index>(work.size()));
      Point dir = ap;
      if (!work.empty()) {
        Matrix N(d, static_cast<Index>(work.size()));
        for (std::size_t j = 0; j < work.size(); ++j) N.col(static_cast<Index>(j)) = cuts[work[j]].normal;
        r = Eigen::CompleteOrthogonalDecomposition<Matrix>(N).solve(ap);
        dir = ap - N * r;
      }
      // Largest multiplier step before a working cut would leave.
      double t1 = std::numeric_limits<double>::infinity();
      std::size_t block = work.size();
      for (std::size_t j = 0; j < work.size(); ++j) {
        const double rj = r[static_cast<Index>(j)];
        if (rj > 1e-14 * ap.norm() * cuts[work[j]].normal.norm() && u[j] / rj < t1) {
          t1 = u[j] / rj;
          block = j;
        }
      }
      const double curvature = dir.dot(ap);
      const bool dependent = curvature <= 1e-20 * ap.squaredNorm() || dir.norm() <= 1e-12 * ap.norm();
      const double violation = cuts[p].violation(z);
      const double t2 = dependent ? std::numeric_limits<double>::infinity()
                                  : std::max(violation, 0.0) / curvature;
      if (block == work.size() && dependent) return std::nullopt;  // empty intersection
      const double t = std::min(t1, t2);
      if (!dependent) z -= t * dir;
      for (std::size_t j = 0; j < work.size(); ++j) u[j] -= t * r[static_cast<Index>(j)];
      up += t;
      if (t2 <= t1) {
        work.push_back(p);
        u.push_back(up);
        break;
      }
      work.erase(work.begin() + static_cast<std::ptrdiff_t>(block));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(block));
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (relative_violation(i) > 1e-11) return std::nullopt;
  }
  return z;
}

/// Non-throwing projection onto an intersection of halfspaces.
inline DykstraResult try_project_halfspace_intersection(const std::vector<HalfspaceCut>& cuts,
                                                        const Point& x0,
                                                        double tol = kDefaultInnerTol,
                                                        int max_cycles = kDefaultInnerCycles) {
  std::vector<const HalfspaceCut*> live;
  for (const auto& c : cuts) {
    require_same_dimension(c.normal, x0, "project_halfspace_intersection");
    if (c.empty()) throw Error(ErrorCode::DegenerateCut, "zero normal with negative offset");
    if (!c.whole_space()) live.push_back(&c);
  }

  DykstraResult out;
  out.converged = true;
  if (live.empty()) {
    out.point = x0;
  } else if (live.size() == 1) {
    out.point = project_halfspace(*live[0], x0);
  } else if (live.size() == 2) {
    out.point = project_two_halfspaces(*live[0], *live[1], x0);
  } else if (std::all_of(live.begin(), live.end(),
                         [&](const HalfspaceCut* c) { return c->violation(x0) <= 0.0; })) {
    out.point = x0;
  } else {
    std::vector<HalfspaceCut> active;
    active.reserve(live.size());
    for (const auto* c : live) active.push_back(*c);
    if (auto exact = project_polyhedron_active_set(active, x0)) {
      out.point = std::move(*exact);
      return out;
    }
    auto proj = [](const HalfspaceCut& c) {
      return [&c](const Point& z) -> Point {
        const double v = c.violation(z);
        if (v <= 0.0) return z;
        return z - (v / c.normal.squaredNorm()) * c.normal;
      };
    };
    std::vector<decltype(proj(active[0]))> projectors;
    projectors.reserve(active.size());
    for (const auto& c : active) projectors.push_back(proj(c));
    return dykstra(projectors, x0, tol, max_cycles);
  }
  return out;
}

inline Point project_halfspace_intersection(const std::vector<HalfspaceCut>& cuts, const Point& x0,
                                            double tol = kDefaultInnerTol,
                                            int max_cycles = kDefaultInnerCycles) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ParameterViolation, "projection tolerance must be > 0");
  DykstraResult r = try_project_halfspace_intersection(cuts, x0, tol, max_cycles);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "Dykstra stopped after " << r.cycles << " cycles; distances to sets:";
    for (double v : r.violations) msg << ' ' << v;
    throw Error(ErrorCode::MaxInnerIterationsExceeded, msg.str());
  }
  return std::move(r.point);
}

// ---------------------------------------------------------------------------
// Feasible sets
// ---------------------------------------------------------------------------

inline Point project(const FeasibleSet& set, const Point& x, double tol = kDefaultInnerTol) {
  if (set.dimension() != x.size()) {
    std::ostringstream msg;
    msg << "project: set dimension " << set.dimension() << " vs point " << x.size();
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  return std::visit(
      [&](const auto& s) -> Point {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Box>) {
          return x.cwiseMax(s.lower).cwiseMin(s.upper);
        } else if constexpr (std::is_same_v<S, Ball>) {
          const Point d = x - s.center;
          const double n = d.norm();
          if (n <= s.radius) return x;
          return s.center + (s.radius / n) * d;
        } else if constexpr (std::is_same_v<S, Polyhedron>) {
          try {
            return project_halfspace_intersection(s.cuts, x, tol);
          } catch (const Error& e) {
            if (e.code() == ErrorCode::MaxInnerIterationsExceeded ||
                e.code() == ErrorCode::EmptyIntersection || e.code() == ErrorCode::DegenerateCut)
              throw Error(ErrorCode::InfeasibleSet, e.what());
            throw;
          }
        } else {
          return x;
        }
      },
      set.shape);
}

inline bool contains(const FeasibleSet& set, const Point& x, double tol = 1e-12) {
  return std::visit(
      [&](const auto& s) -> bool {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Box>) {
          return ((s.lower.array() - tol) <= x.array()).all() &&
                 (x.array() <= (s.upper.array() + tol)).all();
        } else if constexpr (std::is_same_v<S, Ball>) {
          return (x - s.center).norm() <= s.radius + tol;
        } else if constexpr (std::is_same_v<S, Polyhedron>) {
          return std::all_of(s.cuts.begin(), s.cuts.end(), [&](const HalfspaceCut& c) {
            if (c.whole_space()) return true;
            return c.violation(x) <= tol * (1.0 + c.normal.norm());
          });
        } else {
          return true;
        }
      },
      set.shape);
}

/// Random point of the set. `spread` sizes the sampling region for unbounded sets.
template <typename Rng>
Point sample_point(const FeasibleSet& set, Rng& rng, double spread = 1.0,
                   const Point* around = nullptr) {
  const Index d = set.dimension();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto gaussian = [&] {
    Point g(d);
    for (Index j = 0; j < d; ++j) g[j] = normal(rng);
    return g;
  };
  return std::visit(
      [&](const auto& s) -> Point {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Box>) {
          Point p(d);
          for (Index j = 0; j < d; ++j) p[j] = s.lower[j] + unit(rng) * (s.upper[j] - s.lower[j]);
          return p;
        } else if constexpr (std::is_same_v<S, Ball>) {
          Point g = gaussian();
          const double gn = g.norm();
          if (gn == 0.0) return s.center;
          const double r = s.radius * std::pow(unit(rng), 1.0 / static_cast<double>(d));
          return s.center + (r / gn) * g;
        } else {
          Point g = spread * gaussian();
          if (around != nullptr) g += *around;
          return project(set, g);
        }
      },
      set.shape);
}

}  // namespace hybridep
