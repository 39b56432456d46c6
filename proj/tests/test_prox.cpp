#include <catch_amalgamated.hpp>

#include <random>

#include "hybridep/prox.hpp"
#include "oracles.hpp"

using namespace hybridep;
using Catch::Matchers::WithinAbs;

namespace {

Point vec(std::initializer_list<double> v) {
  Point p(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

const FeasibleSet kSquare = FeasibleSet::box(vec({-1, -1}), vec({1, 1}));

Bifunction affine_vi(const Matrix& M, const Point& q) { return Bifunction::vi(Operator::affine(M, q)); }

}  // namespace

TEST_CASE("VI prox is a projection step") {
  auto f = affine_vi(Matrix::Identity(2, 2), Point::Zero(2));
  auto r = solve_prox(f, vec({1, 0}), vec({1, 0}), 0.2, kSquare);
  CHECK(r.path == ProxPath::Projection);
  CHECK_THAT(r.minimizer[0], WithinAbs(0.8, 1e-15));
  CHECK(r.minimizer[1] == 0.0);
}

TEST_CASE("zero operator gives the projection of x") {
  auto f = affine_vi(Matrix::Zero(2, 2), Point::Zero(2));
  auto r = solve_prox(f, vec({0, 0}), vec({3, -0.5}), 0.7, kSquare);
  CHECK(r.minimizer == vec({1, -0.5}));
}

TEST_CASE("affine-quadratic prox on the real line") {
  auto f = Bifunction::affine_quadratic(Matrix::Zero(1, 1), Matrix::Identity(1, 1), vec({0}));
  auto line = FeasibleSet::whole_space(1);
  auto r = solve_prox(f, vec({1}), vec({1}), 0.5, line);
  CHECK(r.path == ProxPath::LinearSolve);
  const double grid = oracles::minimize_1d(
      [&](double y) { return prox_objective(f, vec({1}), vec({1}), 0.5, vec({y})); }, -3, 3);
  CHECK_THAT(r.minimizer[0], WithinAbs(0.75, 1e-12));
  CHECK_THAT(grid, WithinAbs(0.75, 1e-6));
}

TEST_CASE("affine-quadratic prox paths agree with a 2-D search") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    Matrix P = Matrix::Random(2, 2);
    Matrix Q = Matrix::Random(2, 2);
    Q = Q * Q.transpose() * 0.5;  // positive semidefinite
    if (t % 2 == 0) Q = Matrix(Q.diagonal().asDiagonal());
    const Point q = oracles::random_vec(rng, 2);
    auto f = Bifunction::affine_quadratic(P, Q, q);
    const Point w = oracles::random_vec(rng, 2), x = oracles::random_vec(rng, 2, 2.0);
    const double lambda = 0.3;
    auto r = solve_prox(f, w, x, lambda, kSquare);
    CHECK(r.path == (t % 2 == 0 ? ProxPath::CoordinateSolve : ProxPath::ProjectedGradient));
    CHECK(r.converged);
    const Point want = oracles::minimize_2d_box(
        [&](const Point& y) { return prox_objective(f, w, x, lambda, y); }, vec({-1, -1}), vec({1, 1}));
    CHECK((r.minimizer - want).norm() <= 1e-6);
    // No worse than the naive candidate.
    CHECK(prox_objective(f, w, x, lambda, r.minimizer) <=
          prox_objective(f, w, x, lambda, project(kSquare, x)) + 1e-10);
    CHECK(certify_prox(f, w, x, lambda, kSquare, r.minimizer, 200, 1) >= -1e-8);
  }
}

TEST_CASE("subgradient fallback agrees with the VI projection path") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    Matrix M = Matrix::Random(2, 2);
    auto f = affine_vi(M, oracles::random_vec(rng, 2));
    const Point w = oracles::random_vec(rng, 2), x = oracles::random_vec(rng, 2);
    auto exact = solve_prox(f, w, x, 0.4, kSquare);
    ProxOptions opt;
    opt.method = ProxMethod::Subgradient;
    auto slow = solve_prox(f, w, x, 0.4, kSquare, opt);
    CHECK(slow.path == ProxPath::Subgradient);
    CHECK((exact.minimizer - slow.minimizer).norm() <= 1e-6);
  }
}

TEST_CASE("subgradient prox on a nonsmooth black box") {
  // f(x,y) = |y|_1 - |x|_1: prox is soft thresholding of x by lambda.
  BlackBoxBifunction bb{
      [](const Point& x, const Point& y) { return y.lpNorm<1>() - x.lpNorm<1>(); },
      [](const Point&, const Point& y) -> Point {
        return y.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
      },
      2};
  auto f = Bifunction::black_box(bb, LipschitzData{0.5, 0.5});
  ProxOptions opt;
  opt.max_iterations = 200000;
  auto r = solve_prox(f, vec({0, 0}), vec({0.9, -0.2}), 0.3, kSquare, opt);
  CHECK_THAT(r.minimizer[0], WithinAbs(0.6, 1e-4));
  CHECK_THAT(r.minimizer[1], WithinAbs(0.0, 1e-4));
}

TEST_CASE("iteration cap is reported, not thrown") {
  Matrix P = Matrix::Random(2, 2);
  Matrix Q(2, 2);
  Q << 2, 1, 1, 2;
  auto f = Bifunction::affine_quadratic(P, Q, vec({5, -5}));
  ProxOptions opt;
  opt.max_iterations = 2;
  auto r = solve_prox(f, vec({0, 0}), vec({0, 0}), 0.5, kSquare, opt);
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.diagnostic.empty());
  CHECK(contains(kSquare, r.minimizer));
}

TEST_CASE("certificate separates exact and perturbed minimizers") {
  auto f = affine_vi(Matrix::Identity(2, 2), Point::Zero(2));
  const Point w = vec({0.5, -0.5}), x = vec({0.2, 0.4});
  auto r = solve_prox(f, w, x, 0.25, kSquare);
  CHECK(certify_prox(f, w, x, 0.25, kSquare, r.minimizer, 500, 3) >= -1e-10);
  Point bad = r.minimizer;
  bad[0] += 0.1;
  CHECK(certify_prox(f, w, x, 0.25, kSquare, bad, 500, 3) < 0.0);

  auto zero = affine_vi(Matrix::Zero(2, 2), Point::Zero(2));
  CHECK(certify_prox(zero, w, vec({0.1, 0.1}), 0.5, kSquare, vec({0.1, 0.1}), 100, 4) == 0.0);
}

TEST_CASE("prox input checks") {
  auto f = affine_vi(Matrix::Identity(2, 2), Point::Zero(2));
  CHECK_THROWS_AS(solve_prox(f, vec({0, 0}), vec({0, 0}), 0.0, kSquare), Error);
  CHECK_THROWS_AS(solve_prox(f, vec({0}), vec({0, 0}), 0.1, kSquare), Error);
}
