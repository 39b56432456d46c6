#pragma once

// Reference value of P_F(x0), the projection of the anchor onto the common solution set.

#include <cmath>
#include <queue>
#include <vector>

#include "hybridep/error.hpp"
#include "hybridep/geometry.hpp"
#include "hybridep/problems.hpp"

namespace hybridep::harness {

struct OracleOptions {
  /// Cells are accepted once their half-diagonal is at most this.
  double resolution = 1e-6;
  long max_cells = 20000000;
  Index max_dimension = 3;
};

struct OracleResult {
  Point point;
  /// "known_solution" or "branch_and_bound".
  std::string method;
  long cells_visited = 0;
  /// Natural residual at the returned point.
  double residual = 0.0;
};

namespace detail {

struct AffineVi {
  Matrix M;
  Point q;
};

/// Each bifunction as an affine VI x -> Mx + q. An affine-quadratic EP with
/// convex f(x,.) has the same solutions as the VI with M = P + Q.
inline std::optional<std::vector<AffineVi>> as_affine_vis(const CsepInstance& inst) {
  std::vector<AffineVi> out;
  for (const auto& f : inst.bifunctions) {
    if (const auto* vi = std::get_if<ViInduced>(&f.form)) {
      const auto* a = std::get_if<AffineMap>(&vi->op.map);
      if (a == nullptr) return std::nullopt;
      out.push_back({a->M, a->q});
    } else if (const auto* aq = std::get_if<AffineQuadratic>(&f.form)) {
      out.push_back({aq->P + aq->Q, aq->q});
    } else {
      return std::nullopt;
    }
  }
  return out;
}

struct Cell {
  Point center;
  Point half;  // half-widths per coordinate
  double bound = 0.0;  // lower bound on the distance from x0
};

struct CellOrder {
  bool operator()(const Cell& a, const Cell& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.half.norm() > b.half.norm();
  }
};

}  // namespace detail

/// max_i |x - P_C(x - A_i x)|; zero exactly on the common solution set.
inline double natural_residual(const std::vector<detail::AffineVi>& vis, const Box& box,
                               const Point& x) {
  double r = 0.0;
  for (const auto& vi : vis) {
    const Point step = x - (vi.M * x + vi.q);
    r = std::max(r, (x - step.cwiseMax(box.lower).cwiseMin(box.upper)).norm());
  }
  return r;
}

/// Best-first bisection over the box: a cell is discarded when the residual at its
/// center exceeds Lipschitz constant times half-diagonal, so no solution can lie
/// inside; cells are expanded in order of their distance lower bound to x0.
inline OracleResult brute_force_projection(const CsepInstance& inst,
                                           const OracleOptions& opt = {}) {
  const auto vis = detail::as_affine_vis(inst);
  const auto* box = std::get_if<Box>(&inst.set.shape);
  if (!vis || box == nullptr)
    throw Error(ErrorCode::OracleUnavailable, "brute force needs affine VIs over a box");
  if (inst.dimension > opt.max_dimension)
    throw Error(ErrorCode::OracleUnavailable,
                "dimension " + std::to_string(inst.dimension) + " exceeds the brute-force cap");

  double K = 0.0;
  for (const auto& vi : *vis) K = std::max(K, 2.0 + spectral_norm(vi.M));

  auto lower_bound = [&](const Point& c, const Point& h) {
    const Point gap = ((inst.x0 - c).cwiseAbs() - h).cwiseMax(0.0);
    return gap.norm();
  };

  std::priority_queue<detail::Cell, std::vector<detail::Cell>, detail::CellOrder> queue;
  const Point c0 = 0.5 * (box->lower + box->upper);
  const Point h0 = 0.5 * (box->upper - box->lower);
  queue.push({c0, h0, lower_bound(c0, h0)});

  OracleResult result;
  result.method = "branch_and_bound";
  while (!queue.empty()) {
    detail::Cell cell = queue.top();
    queue.pop();
    if (++result.cells_visited > opt.max_cells)
      throw Error(ErrorCode::OracleUnavailable, "brute-force cell budget exhausted");
    const double diag = cell.half.norm();
    const double r = natural_residual(*vis, *box, cell.center);
    if (r > K * diag * (1.0 + 1e-12) + 1e-15) continue;
    if (diag <= opt.resolution) {
      result.point = cell.center;
      result.residual = r;
      return result;
    }
    Index axis = 0;
    cell.half.maxCoeff(&axis);
    Point half = cell.half;
    half[axis] *= 0.5;
    for (double sign : {-1.0, 1.0}) {
      Point c = cell.center;
      c[axis] += sign * half[axis];
      const double lb = lower_bound(c, half);
      queue.push({std::move(c), half, lb});
    }
  }
  throw Error(ErrorCode::EmptyF, "no common solution found in the box");
}

inline OracleResult reference_solution_detail(const CsepInstance& inst,
                                              const OracleOptions& opt = {}) {
  inst.check();
  if (inst.known_solution) {
    OracleResult r;
    r.method = "known_solution";
    if (const auto* s = std::get_if<SingletonSolution>(&*inst.known_solution)) {
      r.point = s->point;
    } else {
      const auto& b = std::get<AffineSegmentBox>(*inst.known_solution);
      r.point = inst.x0.cwiseMax(b.lower).cwiseMin(b.upper);
    }
    return r;
  }
  return brute_force_projection(inst, opt);
}

/// P_F(x0): exact for analytic descriptions, otherwise by branch-and-bound.
inline Point reference_solution(const CsepInstance& inst, const OracleOptions& opt = {}) {
  return reference_solution_detail(inst, opt).point;
}

}  // namespace hybridep::harness
