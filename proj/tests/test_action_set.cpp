#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "scftpl/action_set.hpp"
#include "scftpl/rng.hpp"

using namespace scftpl;

namespace {

Vector random_vector(CounterRng& r, std::size_t d, double scale) {
  Vector v(d);
  for (auto& x : v) x = scale * (2.0 * r.uniform() - 1.0);
  return v;
}

Vector random_interior(const ActionSet& set, CounterRng& r) {
  Vector v = random_vector(r, set.dimension(), 0.95);
  if (set.kind() == SetKind::EuclideanBall) {
    const double n = std::sqrt(norm_sq(v));
    const double target = 0.95 * r.uniform();
    for (auto& x : v) x *= target / n;
  }
  return v;
}

}  // namespace

TEST_CASE("linear minimizer") {
  const auto cube = ActionSet::hypercube(3);
  CHECK(cube.linear_minimizer(Vector{2.0, -1.0, 0.0}) == Vector{-1.0, 1.0, 1.0});
  const auto ball = ActionSet::ball(2);
  const auto a = ball.linear_minimizer(Vector{3.0, 4.0});
  CHECK(a[0] == doctest::Approx(-0.6));
  CHECK(a[1] == doctest::Approx(-0.8));
  CHECK(ball.linear_minimizer(Vector{0.0, 0.0}) == Vector{1.0, 0.0});
  CHECK_THROWS_AS(cube.linear_minimizer(Vector{1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(cube.linear_minimizer(Vector{1.0, NAN, 0.0}), std::invalid_argument);
}

TEST_CASE("linear minimizer attains the support function") {
  CounterRng r(3);
  for (auto kind : {SetKind::Hypercube, SetKind::EuclideanBall}) {
    const ActionSet set(kind, 5);
    for (int k = 0; k < 100; ++k) {
      const Vector v = random_vector(r, 5, 3.0);
      Vector neg(v);
      for (auto& x : neg) x = -x;
      CHECK(dot(set.linear_minimizer(v), v) == doctest::Approx(-set.support(v)).epsilon(1e-14));
      CHECK(dot(set.support_gradient(v), v) == doctest::Approx(set.support(v)).epsilon(1e-14));
    }
  }
}

TEST_CASE("barrier values and parameters") {
  const auto cube = ActionSet::hypercube(2);
  CHECK(cube.barrier_value(Vector{0.0, 0.0}) == 0.0);
  CHECK(cube.barrier_value(Vector{0.5, 0.0}) == doctest::Approx(-std::log(0.75)));
  CHECK(cube.barrier_parameter() == 2.0);
  const auto ball = ActionSet::ball(3);
  CHECK(ball.barrier_value(Vector{0.6, 0.0, 0.0}) == doctest::Approx(-std::log(0.64)));
  CHECK(ball.barrier_parameter() == 1.0);
  CHECK_THROWS_AS(cube.barrier_value(Vector{1.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(ball.barrier_hessian(Vector{0.6, 0.8, 0.0}), std::domain_error);
}

TEST_CASE("barrier gradient matches finite differences") {
  CounterRng r(8);
  for (auto kind : {SetKind::Hypercube, SetKind::EuclideanBall}) {
    const ActionSet set(kind, 4);
    for (int k = 0; k < 20; ++k) {
      const Vector x = random_interior(set, r);
      const Vector g = set.barrier_gradient(x);
      for (std::size_t i = 0; i < 4; ++i) {
        const double h = 1e-6;
        Vector xp(x), xm(x);
        xp[i] += h;
        xm[i] -= h;
        const double fd = (set.barrier_value(xp) - set.barrier_value(xm)) / (2 * h);
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("hessian context agrees with dense matrices") {
  CounterRng r(13);
  for (auto kind : {SetKind::Hypercube, SetKind::EuclideanBall}) {
    const ActionSet set(kind, 6);
    for (int k = 0; k < 50; ++k) {
      const Vector x = random_interior(set, r);
      const auto ctx = set.barrier_hessian(x);
      const Eigen::MatrixXd H = kind == SetKind::Hypercube ? oracle::dense_hessian_hypercube(x)
                                                           : oracle::dense_hessian_ball(x);
      const Vector v = random_vector(r, 6, 1.0);
      const Eigen::VectorXd ev = oracle::to_eigen(v);
      const double direct = ev.dot(H * ev);
      const double inverse = ev.dot(H.ldlt().solve(ev));
      CHECK(ctx.norm_sq(v) == doctest::Approx(direct).epsilon(1e-10));
      CHECK(ctx.norm_sq(v, true) == doctest::Approx(inverse).epsilon(1e-10));
      const Vector hv = ctx.apply(v);
      const Vector hinv = ctx.apply_inverse(v);
      const Eigen::VectorXd dense_hv = H * ev;
      const Eigen::VectorXd dense_inv = H.ldlt().solve(ev);
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(hv[i] == doctest::Approx(dense_hv(i)).epsilon(1e-10));
        CHECK(hinv[i] == doctest::Approx(dense_inv(i)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("local norm at the center of the hypercube") {
  const auto ctx = ActionSet::hypercube(3).barrier_hessian(Vector{0, 0, 0});
  CHECK(ctx.norm_sq(Vector{1, 0, 0}, true) == doctest::Approx(0.5));
  CHECK(ctx.norm_sq(Vector{0, 0, 0}, true) == 0.0);
}

TEST_CASE("conjugate gradient closed forms") {
  const auto cube = ActionSet::hypercube(2);
  const auto x = cube.conjugate_gradient(Vector{1.0, -2.0});
  CHECK(x[0] == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(-(std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-15));
  CHECK(cube.conjugate_gradient(Vector{0.0, 0.0}) == Vector{0.0, 0.0});
  // Tiny and huge arguments stay accurate and interior.
  CHECK(cube.conjugate_gradient(Vector{1e-12, 0})[0] == doctest::Approx(5e-13).epsilon(1e-12));
  const double big = cube.conjugate_gradient(Vector{1e12, 0})[0];
  CHECK(big < 1.0);
  CHECK(1.0 - big == doctest::Approx(1e-12).epsilon(1e-3));

  const auto ball = ActionSet::ball(3);
  const auto y = ball.conjugate_gradient(Vector{1.0, 0.0, 0.0});
  CHECK(y[0] == doctest::Approx(std::sqrt(2.0) - 1.0));
  CHECK(y[1] == 0.0);
}

TEST_CASE("conjugate gradient inverts the barrier gradient") {
  CounterRng r(21);
  for (auto kind : {SetKind::Hypercube, SetKind::EuclideanBall}) {
    const ActionSet set(kind, 5);
    for (int k = 0; k < 50; ++k) {
      const Vector theta = random_vector(r, 5, 20.0);
      const Vector g = set.barrier_gradient(set.conjugate_gradient(theta));
      for (std::size_t i = 0; i < 5; ++i) CHECK(g[i] == doctest::Approx(theta[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("conjugate value matches direct maximization") {
  CounterRng r(34);
  for (int k = 0; k < 20; ++k) {
    const double t = 10.0 * (2.0 * r.uniform() - 1.0);
    const double s = 6.0 * r.uniform();
    const auto cube = ActionSet::hypercube(2);
    CHECK(cube.conjugate_value(Vector{t, s}) ==
          doctest::Approx(oracle::conjugate_1d(t) + oracle::conjugate_1d(s)).epsilon(1e-6));
    // The ball conjugate is radial: the same 1-D problem in |theta|.
    const auto ball = ActionSet::ball(2);
    CHECK(ball.conjugate_value(Vector{t, s}) ==
          doctest::Approx(oracle::conjugate_1d(std::hypot(t, s))).epsilon(1e-6));
  }
  CHECK(ActionSet::hypercube(3).conjugate_value(Vector{0, 0, 0}) == 0.0);
}

TEST_CASE("Minkowski gauge") {
  const auto cube = ActionSet::hypercube(2);
  CHECK(cube.minkowski_gauge(Vector{0, 0}, Vector{0.5, -0.25}) == doctest::Approx(0.5));
  CHECK(cube.minkowski_gauge(Vector{0.5, 0}, Vector{1.0, 0}) == doctest::Approx(1.0));
  CHECK(cube.minkowski_gauge(Vector{0.5, 0}, Vector{0.5, 0}) == 0.0);
  const auto ball = ActionSet::ball(2);
  CHECK(ball.minkowski_gauge(Vector{0, 0}, Vector{0.3, 0.4}) == doctest::Approx(0.5));
  CHECK(ball.minkowski_gauge(Vector{0.5, 0}, Vector{1.0, 0}) == doctest::Approx(1.0));
  CHECK(ball.minkowski_gauge(Vector{0.5, 0}, Vector{0.0, 0}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("Dikin ellipsoid lies inside the body") {
  // Unit local-norm steps from an interior point have gauge at most 1.
  CounterRng r(55);
  for (auto kind : {SetKind::Hypercube, SetKind::EuclideanBall}) {
    const ActionSet set(kind, 4);
    for (int k = 0; k < 200; ++k) {
      const Vector x = random_interior(set, r);
      const auto ctx = set.barrier_hessian(x);
      Vector v = random_vector(r, 4, 1.0);
      const double n = std::sqrt(ctx.norm_sq(v));
      Vector y(x);
      for (std::size_t i = 0; i < 4; ++i) y[i] += v[i] / n;
      CHECK(set.minkowski_gauge(x, y) <= 1.0 + 1e-12);
    }
  }
}
