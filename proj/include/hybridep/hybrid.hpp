#pragma once

// Extra-step-free hybrid (outer approximation) methods for systems of
// equilibrium problems. Each outer step solves one strongly convex prox
// subproblem per bifunction, then projects the anchor x0 onto halfspaces
// that are guaranteed to contain the common solution set F:
//
//   C_n^i = { z : |y^i_{n+1} - z|^2 <= |x_n - z|^2 + eps_n^i }
//   Q_n   = { z : <x0 - x_n, z - x_n> <= 0 }
//
// where eps_n^i = k|x_n - x_{n-1}|^2 + 2 lambda c1 |y^i_n - y^i_{n-1}|^2
//               - (1 - 1/k - 2 lambda c2) |y^i_{n+1} - y^i_n|^2.
//
// The iterates converge strongly to P_F(x0).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "hybridep/error.hpp"
#include "hybridep/geometry.hpp"
#include "hybridep/outcome.hpp"
#include "hybridep/problems.hpp"
#include "hybridep/prox.hpp"
#include "hybridep/worker_pool.hpp"

namespace hybridep {

enum class ParamRule {
  /// 0 < lambda < 1/(2(c1+c2)),  k > 1/(1 - 2 lambda (c1+c2)).
  Strict,
  /// 0 < lambda < 1/(c1+c2),     k > 1/(1 - lambda (c1+c2)).
  Relaxed,
};

struct HybridParams {
  double lambda = 0.0;
  double k = 0.0;
  double tol = 1e-8;
  int max_outer = 100000;
  ParamRule rule = ParamRule::Strict;
};

/// Largest c1 and largest c2 over the bifunctions (taken independently).
inline LipschitzData max_lipschitz(const std::vector<LipschitzData>& lips) {
  LipschitzData out;
  for (const auto& l : lips) {
    out.c1 = std::max(out.c1, l.c1);
    out.c2 = std::max(out.c2, l.c2);
  }
  return out;
}

/// Open interval bounds: lambda < lambda_max and k > k_min(lambda).
struct ParamBounds {
  double lambda_max = 0.0;
  double k_min = 0.0;
};

inline ParamBounds param_bounds(ParamRule rule, const LipschitzData& lip, double lambda) {
  const double factor = rule == ParamRule::Strict ? 2.0 : 1.0;
  ParamBounds b;
  b.lambda_max = 1.0 / (factor * lip.sum());
  const double denom = 1.0 - factor * lambda * lip.sum();
  b.k_min = denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
  return b;
}

inline void validate_params(const HybridParams& p, const std::vector<LipschitzData>& lips) {
  std::ostringstream msg;
  if (!(p.tol >= 0.0)) throw Error(ErrorCode::ParameterViolation, "tol must be >= 0");
  if (p.max_outer < 1) throw Error(ErrorCode::ParameterViolation, "max_outer must be >= 1");
  const LipschitzData lip = max_lipschitz(lips);
  const ParamBounds b = param_bounds(p.rule, lip, p.lambda);
  const char* rule = p.rule == ParamRule::Strict ? "strict" : "relaxed";
  if (!(p.lambda > 0.0) || !(p.lambda < b.lambda_max)) {
    msg << "lambda = " << p.lambda << " outside (0, " << b.lambda_max << ") under the " << rule
        << " rule (c1 = " << lip.c1 << ", c2 = " << lip.c2 << ")";
    throw Error(ErrorCode::ParameterViolation, msg.str());
  }
  if (!(p.k > b.k_min)) {
    msg << "k = " << p.k << " must exceed " << b.k_min << " under the " << rule << " rule";
    throw Error(ErrorCode::ParameterViolation, msg.str());
  }
}

/// Signed correction term; squared norms in, never clamped.
inline double epsilon(const HybridParams& p, const LipschitzData& lip, double dx, double dy_prev,
                      double dy) {
  return p.k * dx + 2.0 * p.lambda * lip.c1 * dy_prev -
         (1.0 - 1.0 / p.k - 2.0 * p.lambda * lip.c2) * dy;
}

/// |y - z|^2 <= |x - z|^2 + eps  <=>  2<x - y, z> <= |x|^2 - |y|^2 + eps.
inline HalfspaceCut build_c_cut(const Point& x_n, const Point& y_next, double eps) {
  require_same_dimension(x_n, y_next, "build_c_cut");
  const Point diff = x_n - y_next;
  HalfspaceCut cut = HalfspaceCut::make(2.0 * diff, diff.dot(x_n + y_next) + eps);
  if (cut.empty()) {
    std::ostringstream msg;
    msg << "y_{n+1} = x_n but the cut offset is " << cut.offset << " < 0";
    throw Error(ErrorCode::InfeasibleCut, msg.str());
  }
  return cut;
}

/// <x0 - x_n, z - x_n> <= 0; the whole space when x_n = x0.
inline HalfspaceCut build_q_cut(const Point& x0, const Point& x_n) {
  require_same_dimension(x0, x_n, "build_q_cut");
  Point a = x0 - x_n;
  const double b = a.dot(x_n);
  return HalfspaceCut::make(std::move(a), b);
}

/// 1-based cyclic index [n] = n mod N + 1.
inline int cyclic_index(long n, int N) { return static_cast<int>(n % N) + 1; }

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, long n, std::size_t i) {
  std::uint64_t h = seed ^ 0x9E3779B97F4A7C15ull;
  h ^= static_cast<std::uint64_t>(n) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(i) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return h;
}

/// Invariant bookkeeping and trace assembly shared by every outer loop.
class Monitor {
 public:
  Monitor(SolverOutcome& out, const SolverOptions& opt, const Point& x0)
      : out_(out), opt_(opt), x0_(x0) {}

  bool has_reference() const { return opt_.reference.has_value(); }
  const Point& reference() const { return *opt_.reference; }

  void prox(const ProxResult& r) {
    ++out_.work.prox_solves;
    out_.work.projections_onto_c += r.projections;
    if (!r.converged) ++out_.violations.prox_nonconverged;
    if (r.certificate_gap) {
      out_.worst.prox_certificate = std::min(out_.worst.prox_certificate, *r.certificate_gap);
      if (*r.certificate_gap < -opt_.certificate_tolerance) ++out_.violations.prox_certificate;
    }
  }

  /// |y_next - x*|^2 <= |x_n - x*|^2 + eps.
  void fejer(const Point& y_next, const Point& x_n, double eps) {
    if (!has_reference()) return;
    const Point& xs = reference();
    const double slack = (x_n - xs).squaredNorm() + eps - (y_next - xs).squaredNorm();
    out_.worst.fejer = std::min(out_.worst.fejer, slack);
    if (slack < -opt_.fejer_tolerance) ++out_.violations.fejer;
  }

  void containment(const std::vector<HalfspaceCut>& cuts) {
    if (!has_reference()) return;
    for (const auto& c : cuts) {
      if (c.whole_space()) continue;
      const double slack = -c.violation(reference());
      out_.worst.containment = std::min(out_.worst.containment, slack);
      if (slack < -opt_.containment_tolerance) ++out_.violations.containment;
    }
  }

  /// x_n must be the projection of x0 onto Q_n.
  void q_projection(const HalfspaceCut& q, const Point& x_n) {
    if (q.whole_space()) return;
    const double err = (project_halfspace(q, x0_) - x_n).norm();
    out_.worst.q_projection_error = std::max(out_.worst.q_projection_error, err);
    if (err > opt_.q_projection_tolerance * (1.0 + x0_.norm())) ++out_.violations.q_projection;
  }

  void monotone(const Point& x_n, const Point& x_next) {
    const double slack = (x_next - x0_).norm() - (x_n - x0_).norm();
    out_.worst.monotone_distance = std::min(out_.worst.monotone_distance, slack);
    if (slack < -opt_.monotone_tolerance) ++out_.violations.monotone_distance;
  }

  void record(int n, const Point& x_n, const Point& x_next, double residual, std::vector<double> eps,
              int degenerate, std::chrono::steady_clock::time_point started) {
    IterationRecord rec;
    rec.n = n;
    rec.step_norm = (x_next - x_n).norm();
    rec.residual = residual;
    rec.eps = std::move(eps);
    rec.degenerate_cuts = degenerate;
    if (has_reference()) rec.dist_to_known = (x_next - reference()).norm();
    if (opt_.record_timing) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              started)
                        .count();
    }
    out_.sum_sq_steps += rec.step_norm * rec.step_norm;
    out_.trace.push_back(std::move(rec));
    out_.iterations = static_cast<int>(out_.trace.size());
    if (opt_.record_iterates) out_.iterates.push_back(x_next);
  }

  ProxOptions prox_options(long n, std::size_t i) const {
    ProxOptions p = opt_.prox;
    p.certify_probes = opt_.certify_probes;
    p.seed = mix_seed(opt_.seed, n, i);
    return p;
  }

 private:
  SolverOutcome& out_;
  const SolverOptions& opt_;
  const Point& x0_;
};

inline void fail(SolverOutcome& out, const std::exception& e, const Point& last) {
  out.stop_reason = StopReason::Error;
  out.message = e.what();
  out.final_x = last;
}

inline void check_instance(const CsepInstance& instance) { instance.check(); }

}  // namespace detail

/// All N bifunctions feed their own cut; x_{n+1} is the projection of x0 onto N+1 halfspaces.
inline SolverOutcome run_parallel_hybrid(const CsepInstance& instance, const HybridParams& params,
                                         const SolverOptions& opt = {}) {
  detail::check_instance(instance);
  const auto lips = instance.lipschitz();
  validate_params(params, lips);

  SolverOutcome out;
  out.algorithm = "parallel";
  const std::size_t N = instance.size();
  const Point& x0 = instance.x0;
  detail::Monitor mon(out, opt, x0);
  WorkerPool pool(opt.workers);

  Point x_prev = x0, x = x0;
  const Point y_init = project(instance.set, x0);
  ++out.work.projections_onto_c;
  std::vector<Point> y_prev(N, y_init), y(N, y_init), y_next(N);
  std::vector<ProxResult> results(N);

  try {
    for (int n = 1; n <= params.max_outer; ++n) {
      const auto started = std::chrono::steady_clock::now();
      pool.run(N, [&](std::size_t i) {
        results[i] = solve_prox(instance.bifunctions[i], y[i], x, params.lambda, instance.set,
                                mon.prox_options(n, i));
      });

      const double dx = (x - x_prev).squaredNorm();
      std::vector<HalfspaceCut> cuts;
      cuts.reserve(N + 1);
      std::vector<double> eps(N);
      double residual = 0.0;
      int degenerate = 0;
      for (std::size_t i = 0; i < N; ++i) {
        mon.prox(results[i]);
        y_next[i] = std::move(results[i].minimizer);
        eps[i] = epsilon(params, lips[i], dx, (y[i] - y_prev[i]).squaredNorm(),
                         (y_next[i] - y[i]).squaredNorm());
        mon.fejer(y_next[i], x, eps[i]);
        cuts.push_back(build_c_cut(x, y_next[i], eps[i]));
        degenerate += cuts.back().degenerate ? 1 : 0;
        residual = std::max(residual, (y_next[i] - x).norm());
      }
      cuts.push_back(build_q_cut(x0, x));
      degenerate += cuts.back().degenerate ? 1 : 0;
      mon.containment(cuts);
      mon.q_projection(cuts.back(), x);

      Point x_next = project_halfspace_intersection(cuts, x0, opt.inner_tol, opt.inner_max_cycles);
      ++out.work.outer_projections;
      mon.monotone(x, x_next);
      mon.record(n, x, x_next, residual, std::move(eps), degenerate, started);

      const double step = out.trace.back().step_norm;
      x_prev = std::move(x);
      x = std::move(x_next);
      std::swap(y_prev, y);
      std::swap(y, y_next);
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

namespace detail {

enum class Selection { MaxDistance, Cyclic };

/// Shared engine for the two-halfspace variants: one C_n cut built from a
/// single selected prox output, projected together with Q_n in closed form.
inline SolverOutcome run_two_cut(const CsepInstance& instance, const HybridParams& params,
                                 const SolverOptions& opt, Selection selection,
                                 const char* name) {
  check_instance(instance);
  const auto lips = instance.lipschitz();
  validate_params(params, lips);
  // One eps per step mixes bifunctions; use the largest constants.
  const LipschitzData lip = max_lipschitz(lips);

  SolverOutcome out;
  out.algorithm = name;
  const std::size_t N = instance.size();
  const Point& x0 = instance.x0;
  Monitor mon(out, opt, x0);
  WorkerPool pool(selection == Selection::MaxDistance ? opt.workers : 1);

  Point x_prev = x0, x = x0;
  const Point y_init = project(instance.set, x0);
  ++out.work.projections_onto_c;
  Point ybar_prev = y_init, ybar = y_init;
  std::vector<ProxResult> results(N);
  // Latest prox output per bifunction (cyclic mode only).
  std::vector<Point> latest(N);
  std::vector<bool> seen(N, false);

  try {
    for (int n = 1; n <= params.max_outer; ++n) {
      const auto started = std::chrono::steady_clock::now();
      Point ybar_next;
      double residual = 0.0;

      if (selection == Selection::MaxDistance) {
        pool.run(N, [&](std::size_t i) {
          results[i] = solve_prox(instance.bifunctions[i], ybar, x, params.lambda, instance.set,
                                  mon.prox_options(n, i));
        });
        std::size_t best = 0;
        double best_dist = -1.0;
        for (std::size_t i = 0; i < N; ++i) {
          mon.prox(results[i]);
          const double d = (results[i].minimizer - x).norm();
          if (d > best_dist) {  // strict: lowest index wins ties
            best_dist = d;
            best = i;
          }
        }
        residual = best_dist;
        ybar_next = std::move(results[best].minimizer);
      } else {
        const std::size_t i = static_cast<std::size_t>(cyclic_index(n, static_cast<int>(N)) - 1);
        ProxResult r = solve_prox(instance.bifunctions[i], ybar, x, params.lambda, instance.set,
                                  mon.prox_options(n, i));
        mon.prox(r);
        ybar_next = std::move(r.minimizer);
        latest[i] = ybar_next;
        seen[i] = true;
        for (std::size_t j = 0; j < N; ++j) {
          residual = std::max(residual, seen[j] ? (latest[j] - x).norm()
                                                : std::numeric_limits<double>::infinity());
        }
      }

      const double e = epsilon(params, lip, (x - x_prev).squaredNorm(),
                               (ybar - ybar_prev).squaredNorm(), (ybar_next - ybar).squaredNorm());
      mon.fejer(ybar_next, x, e);
      std::vector<HalfspaceCut> cuts{build_c_cut(x, ybar_next, e), build_q_cut(x0, x)};
      const int degenerate = (cuts[0].degenerate ? 1 : 0) + (cuts[1].degenerate ? 1 : 0);
      mon.containment(cuts);
      mon.q_projection(cuts[1], x);

      Point x_next = project_two_halfspaces(cuts[0], cuts[1], x0);
      ++out.work.outer_projections;
      mon.monotone(x, x_next);
      mon.record(n, x, x_next, residual, {e}, degenerate, started);

      const double step = out.trace.back().step_norm;
      x_prev = std::move(x);
      x = std::move(x_next);
      ybar_prev = std::move(ybar);
      ybar = std::move(ybar_next);
      if (std::max(step, residual) <= params.tol) {
        out.stop_reason = StopReason::Tolerance;
        break;
      }
    }
    out.final_x = x;
  } catch (const Error& e) {
    fail(out, e, x);
  }
  return out;
}

}  // namespace detail

/// All prox solves anchored at the shared ybar_n; the farthest output from x_n builds C_n.
inline SolverOutcome run_maxsel_hybrid(const CsepInstance& instance, const HybridParams& params,
                                       const SolverOptions& opt = {}) {
  return detail::run_two_cut(instance, params, opt, detail::Selection::MaxDistance, "maxsel");
}

/// Single equilibrium problem: one prox solve and two halfspaces per step.
inline SolverOutcome run_single(const CsepInstance& instance, const HybridParams& params,
                                const SolverOptions& opt = {}) {
  if (instance.size() != 1)
    throw Error(ErrorCode::ParameterViolation, "single requires exactly one bifunction");
  return detail::run_two_cut(instance, params, opt, detail::Selection::MaxDistance, "single");
}

/// One prox solve per step against bifunction [n] = n mod N + 1.
inline SolverOutcome run_sequential(const CsepInstance& instance, const HybridParams& params,
                                    const SolverOptions& opt = {}) {
  return detail::run_two_cut(instance, params, opt, detail::Selection::Cyclic, "sequential");
}

}  // namespace hybridep
