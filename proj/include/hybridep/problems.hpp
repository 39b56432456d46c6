#pragma once

// Bifunction model for equilibrium problems f(x, y) and CSEP instances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hybridep/error.hpp"
#include "hybridep/geometry.hpp"

namespace hybridep {

/// Constants of f(x,y) + f(y,z) >= f(x,z) - c1|x-y|^2 - c2|y-z|^2.
struct LipschitzData {
  double c1 = 0.0;
  double c2 = 0.0;

  double sum() const { return c1 + c2; }
};

/// Largest singular value of M.
inline double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M.transpose() * M, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

struct AffineMap {
  Matrix M;
  Point q;
};

struct OperatorOracle {
  std::function<Point(const Point&)> eval;
  Index dimension = 0;
};

/// A(x), either affine Mx + q or a user callable, with Lipschitz constant L.
struct Operator {
  std::variant<AffineMap, OperatorOracle> map;
  double lipschitz = 1.0;

  /// L defaults to the spectral norm of M (or 1 for the zero map).
  static Operator affine(Matrix M, Point q, std::optional<double> L = std::nullopt) {
    if (M.rows() != M.cols() || M.rows() != q.size())
      throw Error(ErrorCode::DimensionMismatch, "affine operator: M must be d x d and q of size d");
    double lip = L ? *L : spectral_norm(M);
    if (!L && lip == 0.0) lip = 1.0;
    if (!(lip > 0.0)) throw Error(ErrorCode::SchemaError, "operator Lipschitz constant must be > 0");
    return Operator{AffineMap{std::move(M), std::move(q)}, lip};
  }

  static Operator oracle(std::function<Point(const Point&)> eval, Index dimension, double L) {
    if (!(L > 0.0)) throw Error(ErrorCode::SchemaError, "operator Lipschitz constant must be > 0");
    return Operator{OperatorOracle{std::move(eval), dimension}, L};
  }

  Index dimension() const {
    if (const auto* a = std::get_if<AffineMap>(&map)) return a->q.size();
    return std::get<OperatorOracle>(map).dimension;
  }

  Point operator()(const Point& x) const {
    if (const auto* a = std::get_if<AffineMap>(&map)) return a->M * x + a->q;
    return std::get<OperatorOracle>(map).eval(x);
  }
};

/// f(x, y) = <A(x), y - x>.
struct ViInduced {
  Operator op;
};

/// f(x, y) = <P x + Q y + q, y - x>.
struct AffineQuadratic {
  Matrix P;
  Matrix Q;
  Point q;
};

/// User-supplied f and an element of the subdifferential of f(x, .) at y.
struct BlackBoxBifunction {
  std::function<double(const Point&, const Point&)> eval;
  std::function<Point(const Point&, const Point&)> subgrad2;
  Index dimension = 0;
};

struct Bifunction {
  std::variant<ViInduced, AffineQuadratic, BlackBoxBifunction> form;
  /// Explicit constants; when empty, `default_lipschitz` supplies them.
  std::optional<LipschitzData> lipschitz;
  std::string label;

  static Bifunction vi(Operator op, std::string label = "vi") {
    return Bifunction{ViInduced{std::move(op)}, std::nullopt, std::move(label)};
  }

  static Bifunction affine_quadratic(Matrix P, Matrix Q, Point q,
                                     std::string label = "affine_quadratic") {
    const Index d = q.size();
    if (P.rows() != d || P.cols() != d || Q.rows() != d || Q.cols() != d)
      throw Error(ErrorCode::DimensionMismatch, "affine_quadratic: P, Q must be d x d with d = |q|");
    return Bifunction{AffineQuadratic{std::move(P), std::move(Q), std::move(q)}, std::nullopt,
                      std::move(label)};
  }

  static Bifunction black_box(BlackBoxBifunction bb, std::optional<LipschitzData> lip,
                              std::string label = "black_box") {
    return Bifunction{std::move(bb), lip, std::move(label)};
  }

  Index dimension() const {
    return std::visit(
        [](const auto& f) -> Index {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, ViInduced>) return f.op.dimension();
          else if constexpr (std::is_same_v<F, AffineQuadratic>) return f.q.size();
          else return f.dimension;
        },
        form);
  }

  bool is_vi() const { return std::holds_alternative<ViInduced>(form); }
  bool is_affine_quadratic() const { return std::holds_alternative<AffineQuadratic>(form); }
  bool is_black_box() const { return std::holds_alternative<BlackBoxBifunction>(form); }
  /// Both built-in families are differentiable in y.
  bool is_smooth() const { return !is_black_box(); }
};

inline double eval(const Bifunction& f, const Point& x, const Point& y) {
  require_same_dimension(x, y, "eval");
  if (f.dimension() != x.size()) throw Error(ErrorCode::DimensionMismatch, "eval: bifunction dimension");
  return std::visit(
      [&](const auto& g) -> double {
        using F = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<F, ViInduced>) {
          return g.op(x).dot(y - x);
        } else if constexpr (std::is_same_v<F, AffineQuadratic>) {
          return (g.P * x + g.Q * y + g.q).dot(y - x);
        } else {
          return g.eval(x, y);
        }
      },
      f.form);
}

inline Point subgrad2(const Bifunction& f, const Point& x, const Point& y) {
  require_same_dimension(x, y, "subgrad2");
  if (f.dimension() != x.size())
    throw Error(ErrorCode::DimensionMismatch, "subgrad2: bifunction dimension");
  return std::visit(
      [&](const auto& g) -> Point {
        using F = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<F, ViInduced>) {
          return g.op(x);
        } else if constexpr (std::is_same_v<F, AffineQuadratic>) {
          return g.P * x + g.Q.transpose() * (y - x) + g.Q * y + g.q;
        } else {
          return g.subgrad2(x, y);
        }
      },
      f.form);
}

/// ViInduced: c1 = c2 = L/2. AffineQuadratic: c1 = c2 = |P - Q^T|_2 / 2.
inline LipschitzData default_lipschitz(const Bifunction& f) {
  return std::visit(
      [&](const auto& g) -> LipschitzData {
        using F = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<F, ViInduced>) {
          return {g.op.lipschitz / 2.0, g.op.lipschitz / 2.0};
        } else if constexpr (std::is_same_v<F, AffineQuadratic>) {
          // f(x,y) + f(y,z) - f(x,z) = <(Q^T - P)(y - x), y - z>.
          const double n = spectral_norm(g.P - g.Q.transpose());
          return {n / 2.0, n / 2.0};
        } else {
          throw Error(ErrorCode::UnknownConstants,
                      "black-box bifunction '" + f.label + "' needs explicit c1, c2");
        }
      },
      f.form);
}

/// Explicit constants when given, otherwise the family default; rejects c1 + c2 = 0.
inline LipschitzData resolve_lipschitz(const Bifunction& f) {
  const LipschitzData lip = f.lipschitz ? *f.lipschitz : default_lipschitz(f);
  if (!(lip.c1 >= 0.0) || !(lip.c2 >= 0.0))
    throw Error(ErrorCode::UnknownConstants, "c1, c2 must be nonnegative for '" + f.label + "'");
  if (!(lip.sum() > 0.0))
    throw Error(ErrorCode::UnknownConstants,
                "c1 + c2 = 0 for '" + f.label + "'; the step-size bound is undefined");
  return lip;
}

struct SingletonSolution {
  Point point;
};

/// Box with some coordinates pinned (lower == upper); projection is a clamp.
struct AffineSegmentBox {
  Point lower;
  Point upper;
};

using KnownSolution = std::variant<SingletonSolution, AffineSegmentBox>;

struct CsepInstance {
  std::string name;
  Index dimension = 0;
  FeasibleSet set = FeasibleSet::whole_space(0);
  std::vector<Bifunction> bifunctions;
  std::optional<KnownSolution> known_solution;
  Point x0;

  std::size_t size() const { return bifunctions.size(); }

  void check() const {
    if (dimension <= 0) throw Error(ErrorCode::SchemaError, "dimension must be positive");
    if (bifunctions.empty()) throw Error(ErrorCode::SchemaError, "at least one bifunction required");
    if (set.dimension() != dimension) throw Error(ErrorCode::DimensionMismatch, "set dimension");
    if (x0.size() != dimension) throw Error(ErrorCode::DimensionMismatch, "x0 dimension");
    if (!all_finite(x0)) throw Error(ErrorCode::SchemaError, "x0 must be finite");
    for (const auto& f : bifunctions) {
      if (f.dimension() != dimension)
        throw Error(ErrorCode::DimensionMismatch, "bifunction '" + f.label + "' dimension");
    }
    if (known_solution) {
      std::visit(
          [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, SingletonSolution>) {
              if (k.point.size() != dimension)
                throw Error(ErrorCode::DimensionMismatch, "known_solution point");
            } else {
              if (k.lower.size() != dimension || k.upper.size() != dimension)
                throw Error(ErrorCode::DimensionMismatch, "known_solution bounds");
              if ((k.lower.array() > k.upper.array()).any())
                throw Error(ErrorCode::SchemaError, "known_solution requires lower <= upper");
            }
          },
          *known_solution);
    }
  }

  /// Per-bifunction constants, resolved once.
  std::vector<LipschitzData> lipschitz() const {
    std::vector<LipschitzData> out;
    out.reserve(bifunctions.size());
    for (const auto& f : bifunctions) out.push_back(resolve_lipschitz(f));
    return out;
  }
};

// ---------------------------------------------------------------------------
// Sampling-based validation of (A1), (A2), (A4) and pseudomonotonicity
// ---------------------------------------------------------------------------

struct BifunctionReport {
  std::string label;
  int samples = 0;
  double max_abs_diagonal = 0.0;
  int convexity_violations = 0;
  int pseudomonotonicity_violations = 0;
  int lipschitz_violations = 0;
  double worst_lipschitz_slack = std::numeric_limits<double>::infinity();
  std::optional<double> subgradient_discrepancy;
  std::vector<std::string> warnings;

  bool clean() const {
    return max_abs_diagonal <= 1e-10 && convexity_violations == 0 &&
           pseudomonotonicity_violations == 0 && lipschitz_violations == 0;
  }
};

struct ValidationReport {
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<BifunctionReport> bifunctions;
  std::vector<std::string> notes;

  bool clean() const {
    return std::all_of(bifunctions.begin(), bifunctions.end(),
                       [](const BifunctionReport& b) { return b.clean(); });
  }
};

/// Central differences of y -> f(x, y) against subgrad2, max abs discrepancy.
inline double subgradient_fd_discrepancy(const Bifunction& f, const Point& x, const Point& y,
                                         double h = 1e-5) {
  const Point g = subgrad2(f, x, y);
  double worst = 0.0;
  Point yp = y, ym = y;
  for (Index j = 0; j < y.size(); ++j) {
    yp[j] = y[j] + h;
    ym[j] = y[j] - h;
    const double fd = (eval(f, x, yp) - eval(f, x, ym)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g[j]));
    yp[j] = y[j];
    ym[j] = y[j];
  }
  return worst;
}

inline ValidationReport validate(const CsepInstance& instance, int samples,
                                 std::uint64_t seed = 0) {
  if (samples < 1) throw Error(ErrorCode::ParameterViolation, "validate: samples must be >= 1");
  instance.check();
  ValidationReport report;
  report.samples = samples;
  report.seed = seed;
  report.notes.push_back(
      "weak continuity (A3) is not machine-checkable; only sampled values are examined");

  std::mt19937_64 rng(seed);
  const double spread = 1.0 + instance.x0.norm();
  auto draw = [&] { return sample_point(instance.set, rng, spread); };

  for (const auto& f : instance.bifunctions) {
    BifunctionReport br;
    br.label = f.label;
    br.samples = samples;

    std::optional<LipschitzData> lip;
    try {
      lip = resolve_lipschitz(f);
    } catch (const Error& e) {
      br.warnings.push_back(e.what());
    }

    if (const auto* vi = std::get_if<ViInduced>(&f.form)) {
      if (const auto* a = std::get_if<AffineMap>(&vi->op.map)) {
        const double est = spectral_norm(a->M);
        if (vi->op.lipschitz + 1e-12 < est) {
          br.warnings.push_back("declared L = " + std::to_string(vi->op.lipschitz) +
                                " is below the spectral norm " + std::to_string(est));
        }
      }
    }

    double worst_fd = 0.0;
    for (int s = 0; s < samples; ++s) {
      const Point x = draw();
      const Point y = draw();
      const Point z = draw();

      br.max_abs_diagonal = std::max(br.max_abs_diagonal, std::abs(eval(f, x, x)));

      // f(x, .) convex: value at the midpoint below the chord.
      const Point mid = 0.5 * (y + z);
      const double fy = eval(f, x, y);
      const double fz = eval(f, x, z);
      const double fm = eval(f, x, mid);
      const double scale = 1.0 + std::abs(fy) + std::abs(fz);
      if (fm > 0.5 * (fy + fz) + 1e-10 * scale) ++br.convexity_violations;

      const double fxy = fy;
      const double fyx = eval(f, y, x);
      if (fxy >= 0.0 && fyx > 1e-10) ++br.pseudomonotonicity_violations;

      if (lip) {
        const double slack = eval(f, x, y) + eval(f, y, z) - eval(f, x, z) +
                             lip->c1 * (x - y).squaredNorm() + lip->c2 * (y - z).squaredNorm();
        br.worst_lipschitz_slack = std::min(br.worst_lipschitz_slack, slack);
        if (slack < -1e-9) ++br.lipschitz_violations;
      }

      if (f.is_smooth()) worst_fd = std::max(worst_fd, subgradient_fd_discrepancy(f, x, y));
    }
    if (f.is_smooth()) br.subgradient_discrepancy = worst_fd;
    report.bifunctions.push_back(std::move(br));
  }
  return report;
}

}  // namespace hybridep
