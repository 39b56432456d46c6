#pragma once

// Two earlier strong-convergence hybrids for a single equilibrium problem,
// kept as comparison baselines. Both restrict their cuts to C, so every outer
// step projects x0 onto C ∩ C_n ∩ Q_n: exactly when C is a box or polyhedron,
// by Dykstra's method when C is a ball.
//
//   extragradient:  y_n = prox(f, x_n; x_n),  z_n = prox(f, y_n; x_n),
//                   C_n = {z in C : |z_n - z| <= |x_n - z|}
//   armijo:         y_n = prox(f, x_n; x_n), z_n = (1-eta^m) x_n + eta^m y_n,
//                   u_n = P_C(x_n - sigma_n g_n),  g_n in d2 f(z_n, z_n),
//                   C_n = {z in C : |u_n - z| <= |x_n - z|}

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "hybridep/error.hpp"
#include "hybridep/geometry.hpp"
#include "hybridep/hybrid.hpp"
#include "hybridep/outcome.hpp"
#include "hybridep/problems.hpp"
#include "hybridep/prox.hpp"

namespace hybridep {

struct ExtragradientParams {
  double lambda = 0.0;
  double tol = 1e-8;
  int max_outer = 100000;
};

struct ArmijoParams {
  double eta = 0.5;
  double lambda = 0.0;
  int max_linesearch = 100;
  double tol = 1e-8;
  int max_outer = 100000;
};

struct LinesearchResult {
  int m = 0;
  Point z;
};

inline void validate_params(const ExtragradientParams& p, const LipschitzData& lip) {
  if (!(p.tol >= 0.0)) throw Error(ErrorCode::ParameterViolation, "tol must be >= 0");
  if (p.max_outer < 1) throw Error(ErrorCode::ParameterViolation, "max_outer must be >= 1");
  double bound = std::numeric_limits<double>::infinity();
  if (lip.c1 > 0.0) bound = std::min(bound, 1.0 / (2.0 * lip.c1));
  if (lip.c2 > 0.0) bound = std::min(bound, 1.0 / (2.0 * lip.c2));
  if (!(p.lambda > 0.0) || !(p.lambda < bound)) {
    std::ostringstream msg;
    msg << "extragradient lambda = " << p.lambda << " outside (0, " << bound << ")";
    throw Error(ErrorCode::ParameterViolation, msg.str());
  }
}

inline void validate_params(const ArmijoParams& p) {
  if (!(p.eta > 0.0 && p.eta < 1.0)) throw Error(ErrorCode::ParameterViolation, "eta must lie in (0, 1)");
  if (!(p.lambda > 0.0)) throw Error(ErrorCode::ParameterViolation, "lambda must be > 0");
  if (p.max_linesearch < 1) throw Error(ErrorCode::ParameterViolation, "max_linesearch must be >= 1");
  if (!(p.tol >= 0.0)) throw Error(ErrorCode::ParameterViolation, "tol must be >= 0");
  if (p.max_outer < 1) throw Error(ErrorCode::ParameterViolation, "max_outer must be >= 1");
}

/// Smallest m >= 1 with f(z, y) + |x - y|^2 / (2 lambda) <= 0, z = (1 - eta^m) x + eta^m y.
inline LinesearchResult armijo_linesearch(const Bifunction& f, const Point& x, const Point& y,
                                          double lambda, const ArmijoParams& params) {
  require_same_dimension(x, y, "armijo_linesearch");
  if (x == y) throw Error(ErrorCode::ParameterViolation, "armijo_linesearch requires x != y");
  const double penalty = (x - y).squaredNorm() / (2.0 * lambda);
  double step = 1.0;
  double last = 0.0;
  for (int m = 1; m <= params.max_linesearch; ++m) {
    step *= params.eta;
    Point z = (1.0 - step) * x + step * y;
    last = eval(f, z, y) + penalty;
    if (!std::isfinite(last)) throw Error(ErrorCode::NonFiniteObjective, "linesearch value");
    if (last <= 0.0) return {m, std::move(z)};
  }
  std::ostringstream msg;
  msg << "no acceptable m in 1.." << params.max_linesearch << "; last value " << last;
  throw Error(ErrorCode::LinesearchFailed, msg.str());
}

namespace detail {

inline void require_single(const CsepInstance& instance, const char* name) {
  if (instance.size() != 1) {
    throw Error(ErrorCode::ParameterViolation,
                std::string(name) + " requires exactly one bifunction");
  }
}

/// Projection of x0 onto C ∩ cuts.
inline Point project_onto_set_and_cuts(const FeasibleSet& set, const std::vector<HalfspaceCut>& cuts,
                                       const Point& x0, const SolverOptions& opt) {
  if (set.is_whole_space())
    return project_halfspace_intersection(cuts, x0, opt.inner_tol, opt.inner_max_cycles);
  // Boxes and polyhedra are themselves halfspace lists.
  if (const auto* box = std::get_if<Box>(&set.shape)) {
    std::vector<HalfspaceCut> all = cuts;
    for (Index j = 0; j < x0.size(); ++j) {
      Point e = Point::Zero(x0.size());
      e[j] = 1.0;
      all.push_back(HalfspaceCut::make(e, box->upper[j]));
      all.push_back(HalfspaceCut::make(-e, -box->lower[j]));
    }
    return project_halfspace_intersection(all, x0, opt.inner_tol, opt.inner_max_cycles);
  }
  if (const auto* poly = std::get_if<Polyhedron>(&set.shape)) {
    std::vector<HalfspaceCut> all = cuts;
    all.insert(all.end(), poly->cuts.begin(), poly->cuts.end());
    return project_halfspace_intersection(all, x0, opt.inner_tol, opt.inner_max_cycles);
  }
  std::vector<std::function<Point(const Point&)>> projectors;
  projectors.emplace_back([&set, &opt](const Point& z) { return project(set, z, opt.inner_tol); });
  for (const auto& c : cuts) {
    if (c.empty()) throw Error(ErrorCode::DegenerateCut, "zero normal with negative offset");
    if (c.whole_space()) continue;
    projectors.emplace_back([&c](const Point& z) -> Point {
      const double v = c.violation(z);
      if (v <= 0.0) return z;
      return z - (v / c.normal.squaredNorm()) * c.normal;
    });
  }
  if (projectors.size() == 1) return project(set, x0, opt.inner_tol);
  DykstraResult r = dykstra(projectors, x0, opt.inner_tol, opt.inner_max_cycles);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "Dykstra stopped after " << r.cycles << " cycles; distances to sets:";
    for (double v : r.violations) msg << ' ' << v;
    throw Error(ErrorCode::MaxInnerIterationsExceeded, msg.str());
  }
  return std::move(r.point);
}

inline void require_start_in_set(const CsepInstance& instance, const char* name) {
  if (!contains(instance.set, instance.x0, 1e-12)) {
    throw Error(ErrorCode::ParameterViolation, std::string(name) + " requires x0 in C");
  }
}

}  // namespace detail

inline SolverOutcome run_hybrid_extragradient(const CsepInstance& instance,
                                              const ExtragradientParams& params,
                                              const SolverOptions& opt = {}) {
  instance.check();
  detail::require_single(instance, "extragradient");
  const LipschitzData lip = instance.lipschitz().front();
  validate_params(params, lip);
  detail::require_start_in_set(instance, "extragradient");

  SolverOutcome out;
  out.algorithm = "extragradient";
  const Bifunction& f = instance.bifunctions.front();
  const Point& x0 = instance.x0;
  detail::Monitor mon(out, opt, x0);
  Point x = x0;

  try {
    for (int n = 1; n <= params.max_outer; ++n) {
      const auto started = std::chrono::steady_clock::now();
      ProxResult ry = solve_prox(f, x, x, params.lambda, instance.set, mon.prox_options(n, 0));
      mon.prox(ry);
      ProxResult rz =
          solve_prox(f, ry.minimizer, x, params.lambda, instance.set, mon.prox_options(n, 1));
      mon.prox(rz);
      const Point& y = ry.minimizer;
      const Point& z = rz.minimizer;
      const double residual = std::max((y - x).norm(), (z - x).norm());

      mon.fejer(z, x, 0.0);
      std::vector<HalfspaceCut> cuts{build_c_cut(x, z, 0.0), build_q_cut(x0, x)};
      const int degenerate = (cuts[0].degenerate ? 1 : 0) + (cuts[1].degenerate ? 1 : 0);
      mon.containment(cuts);
      mon.q_projection(cuts[1], x);

      Point x_next = detail::project_onto_set_and_cuts(instance.set, cuts, x0, opt);
      ++out.work.outer_projections;
      mon.monotone(x, x_next);
      mon.record(n, x, x_next, residual, {0.0}, degenerate, started);

      const double step = out.trace.back().step_norm;
      x = std::move(x_next);
      if (std::max(step, residual) <= params.tol) {
        out.stop_reason = StopReason::Tolerance;
        break;
      }
    }
    out.final_x = x;
  } catch (const Error& e) {
    detail::fail(out, e, x);
  }
  return out;
}

inline SolverOutcome run_armijo_hybrid(const CsepInstance& instance, const ArmijoParams& params,
                                       const SolverOptions& opt = {}) {
  instance.check();
  detail::require_single(instance, "armijo");
  validate_params(params);
  detail::require_start_in_set(instance, "armijo");

  SolverOutcome out;
  out.algorithm = "armijo";
  const Bifunction& f = instance.bifunctions.front();
  const Point& x0 = instance.x0;
  detail::Monitor mon(out, opt, x0);
  Point x = x0;

  try {
    for (int n = 1; n <= params.max_outer; ++n) {
      const auto started = std::chrono::steady_clock::now();
      ProxResult ry = solve_prox(f, x, x, params.lambda, instance.set, mon.prox_options(n, 0));
      mon.prox(ry);
      const Point& y = ry.minimizer;
      const double residual = (y - x).norm();

      Point u = x;
      if (!(x == y)) {
        LinesearchResult ls = armijo_linesearch(f, x, y, params.lambda, params);
        out.work.linesearch_trials += ls.m;
        const Point g = subgrad2(f, ls.z, ls.z);
        const double gg = g.squaredNorm();
        if (gg > 0.0) {
          const double t = std::pow(params.eta, ls.m);
          const double sigma = -t * eval(f, ls.z, y) / ((1.0 - t) * gg);
          u = project(instance.set, x - sigma * g);
          ++out.work.projections_onto_c;
        }
      }

      mon.fejer(u, x, 0.0);
      std::vector<HalfspaceCut> cuts{build_c_cut(x, u, 0.0), build_q_cut(x0, x)};
      const int degenerate = (cuts[0].degenerate ? 1 : 0) + (cuts[1].degenerate ? 1 : 0);
      mon.containment(cuts);
      mon.q_projection(cuts[1], x);

      Point x_next = detail::project_onto_set_and_cuts(instance.set, cuts, x0, opt);
      ++out.work.outer_projections;
      mon.monotone(x, x_next);
      mon.record(n, x, x_next, residual, {0.0}, degenerate, started);

      const double step = out.trace.back().step_norm;
      x = std::move(x_next);
      if (std::max(step, residual) <= params.tol) {
        out.stop_reason = StopReason::Tolerance;
        break;
      }
    }
    out.final_x = x;
  } catch (const Error& e) {
    detail::fail(out, e, x);
  }
  return out;
}

}  // namespace hybridep
