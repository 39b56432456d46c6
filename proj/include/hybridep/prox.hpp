#pragma once

// Inner subproblem: argmin_{y in C} lambda f(w, y) + 1/2 |x - y|^2.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "hybridep/error.hpp"
#include "hybridep/geometry.hpp"
#include "hybridep/problems.hpp"

namespace hybridep {

enum class ProxMethod {
  Auto,
  /// Subgradient fallback regardless of the bifunction family.
  Subgradient,
};

enum class ProxPath {
  Projection,
  CoordinateSolve,
  LinearSolve,
  ProjectedGradient,
  Subgradient,
};

inline const char* to_string(ProxPath p) {
  switch (p) {
    case ProxPath::Projection: return "projection";
    case ProxPath::CoordinateSolve: return "coordinate_solve";
    case ProxPath::LinearSolve: return "linear_solve";
    case ProxPath::ProjectedGradient: return "projected_gradient";
    case ProxPath::Subgradient: return "subgradient";
  }
  return "?";
}

struct ProxOptions {
  /// Zero selects the per-path default.
  double tol = 0.0;
  int max_iterations = 100000;
  ProxMethod method = ProxMethod::Auto;
  /// Number of random probes for the optimality certificate; 0 skips it.
  int certify_probes = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kProxTolExact = 1e-12;
inline constexpr double kProxTolGradient = 1e-10;
inline constexpr double kProxTolSubgradient = 1e-8;

struct ProxResult {
  Point minimizer;
  /// Worst value of the first-order optimality inequality over the probes.
  std::optional<double> certificate_gap;
  int inner_iterations = 0;
  /// Number of projections onto the feasible set performed.
  int projections = 0;
  bool converged = true;
  ProxPath path = ProxPath::Projection;
  std::string diagnostic;
};

inline double prox_objective(const Bifunction& f, const Point& w, const Point& x, double lambda,
                             const Point& y) {
  return lambda * eval(f, w, y) + 0.5 * (x - y).squaredNorm();
}

/// min over probes y in C of <r - x, y - r> - lambda (f(w, r) - f(w, y)).
/// Nonnegative (up to rounding) iff r satisfies the first-order optimality condition.
template <typename Rng>
double certify_prox(const Bifunction& f, const Point& w, const Point& x, double lambda,
                    const FeasibleSet& set, const Point& result, int probes, Rng& rng) {
  const Point diff = result - x;
  // For f(w, y) = <A(w), y - w> the gap is linear in y.
  std::optional<Point> slope;
  if (const auto* vi = std::get_if<ViInduced>(&f.form)) slope = diff + lambda * vi->op(w);
  const double f_r = slope ? 0.0 : eval(f, w, result);
  const double spread = 1.0 + result.norm();
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int p = 0; p < probes; ++p) {
    Point y;
    if (p % 2 == 0) {
      y = sample_point(set, rng, spread, &result);
    } else {
      // Local probes catch first-order violations that far samples miss.
      Point g(result.size());
      for (Index j = 0; j < g.size(); ++j) g[j] = normal(rng);
      const double radius = std::pow(10.0, -1.0 - 3.0 * std::uniform_real_distribution<double>(0, 1)(rng));
      y = project(set, result + (radius * spread / std::max(g.norm(), 1e-300)) * g);
    }
    const double gap = slope ? slope->dot(y - result)
                             : diff.dot(y - result) - lambda * (f_r - eval(f, w, y));
    worst = std::min(worst, gap);
  }
  return probes > 0 ? worst : 0.0;
}

inline double certify_prox(const Bifunction& f, const Point& w, const Point& x, double lambda,
                           const FeasibleSet& set, const Point& result, int probes,
                           std::uint64_t seed = 0) {
  // One fresh stream per solve; minstd is cheap to seed.
  std::minstd_rand rng(static_cast<std::uint_fast32_t>(seed ^ (seed >> 32)));
  return certify_prox(f, w, x, lambda, set, result, probes, rng);
}

namespace detail {

inline void require_finite(const Point& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorCode::NonFiniteObjective, what);
}

inline bool is_diagonal(const Matrix& Q) {
  return (Q - Matrix(Q.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

inline ProxResult prox_affine_quadratic(const AffineQuadratic& g, const Point& w, const Point& x,
                                        double lambda, const FeasibleSet& set,
                                        const ProxOptions& opt) {
  ProxResult r;
  // Gradient of y -> lambda <Pw + Qy + q, y - w> + 1/2 |x - y|^2 is
  // H y - b with H = I + lambda (Q + Q^T) and b = x - lambda (Pw + q - Q^T w).
  const Index d = x.size();
  const Matrix S = g.Q + g.Q.transpose();
  const Point b = x - lambda * (g.P * w + g.q - g.Q.transpose() * w);

  if (set.is_whole_space()) {
    r.path = ProxPath::LinearSolve;
    Matrix H = Matrix::Identity(d, d) + lambda * S;
    Eigen::LDLT<Matrix> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw Error(ErrorCode::NonFiniteObjective, "prox Hessian is not positive definite");
    r.minimizer = ldlt.solve(b);
    require_finite(r.minimizer, "prox linear solve");
    return r;
  }

  if (set.is_box() && is_diagonal(g.Q)) {
    r.path = ProxPath::CoordinateSolve;
    const auto& box = std::get<Box>(set.shape);
    r.minimizer.resize(d);
    for (Index j = 0; j < d; ++j) {
      const double curvature = 1.0 + lambda * S(j, j);
      if (!(curvature > 0.0))
        throw Error(ErrorCode::NonFiniteObjective, "prox objective is not strongly convex");
      r.minimizer[j] = std::clamp(b[j] / curvature, box.lower[j], box.upper[j]);
    }
    r.projections = 1;
    require_finite(r.minimizer, "prox coordinate solve");
    return r;
  }

  r.path = ProxPath::ProjectedGradient;
  const double tol = opt.tol > 0.0 ? opt.tol : kProxTolGradient;
  const double smoothness = 1.0 + lambda * spectral_norm(S);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  const double convexity = std::max(1e-12, 1.0 + lambda * eig.eigenvalues().minCoeff());
  const double step = 1.0 / smoothness;
  // Contraction factor 1 - convexity/smoothness turns displacement into distance.
  const double stop = tol * convexity / smoothness;
  const Matrix H = Matrix::Identity(d, d) + lambda * S;

  Point y = project(set, x);
  r.projections = 1;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Point next = project(set, y - step * (H * y - b));
    ++r.projections;
    require_finite(next, "prox projected gradient");
    const double moved = (next - y).norm();
    y = std::move(next);
    r.inner_iterations = it;
    if (moved <= stop) {
      r.minimizer = std::move(y);
      return r;
    }
  }
  r.converged = false;
  r.diagnostic = "projected gradient hit the iteration cap";
  r.minimizer = std::move(y);
  return r;
}

inline ProxResult prox_subgradient(const Bifunction& f, const Point& w, const Point& x,
                                   double lambda, const FeasibleSet& set, const ProxOptions& opt) {
  ProxResult r;
  r.path = ProxPath::Subgradient;
  const double tol = opt.tol > 0.0 ? opt.tol : kProxTolSubgradient;

  // Objective is 1-strongly convex: steps 1/(k+1) with (k+1)-weighted averaging.
  Point y = project(set, x);
  r.projections = 1;
  Point average = y;
  double weight_sum = 0.0;
  auto objective = [&](const Point& p) { return prox_objective(f, w, x, lambda, p); };

  for (int k = 0; k < opt.max_iterations; ++k) {
    const Point s = lambda * subgrad2(f, w, y) + (y - x);
    require_finite(s, "prox subgradient");
    const double t = 1.0 / static_cast<double>(k + 1);
    Point next = project(set, y - t * s);
    ++r.projections;
    const double moved = (next - y).norm();
    y = std::move(next);
    const double wk = static_cast<double>(k + 1);
    weight_sum += wk;
    average += (wk / weight_sum) * (y - average);
    r.inner_iterations = k + 1;
    if (moved <= tol) {
      r.minimizer = std::move(y);
      return r;
    }
  }
  r.converged = false;
  r.diagnostic = "subgradient method hit the iteration cap";
  r.minimizer = objective(average) < objective(y) ? average : y;
  return r;
}

}  // namespace detail

inline ProxResult solve_prox(const Bifunction& f, const Point& w, const Point& x, double lambda,
                             const FeasibleSet& set, const ProxOptions& opt = {}) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::ParameterViolation, "prox: lambda must be > 0");
  require_same_dimension(w, x, "solve_prox");
  if (set.dimension() != x.size() || f.dimension() != x.size())
    throw Error(ErrorCode::DimensionMismatch, "solve_prox: set/bifunction dimension");

  ProxResult r;
  if (opt.method == ProxMethod::Subgradient || f.is_black_box()) {
    r = detail::prox_subgradient(f, w, x, lambda, set, opt);
  } else if (const auto* vi = std::get_if<ViInduced>(&f.form)) {
    // lambda <A(w), y - w> + 1/2 |x - y|^2 = 1/2 |y - (x - lambda A(w))|^2 + const.
    const Point a = vi->op(w);
    detail::require_finite(a, "operator value");
    r.path = ProxPath::Projection;
    r.minimizer = project(set, x - lambda * a);
    r.projections = 1;
  } else {
    r = detail::prox_affine_quadratic(std::get<AffineQuadratic>(f.form), w, x, lambda, set, opt);
  }

  if (opt.certify_probes > 0) {
    r.certificate_gap =
        certify_prox(f, w, x, lambda, set, r.minimizer, opt.certify_probes, opt.seed);
  }
  return r;
}

}  // namespace hybridep
