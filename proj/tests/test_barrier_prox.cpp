#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "proxipm/barrier_prox.hpp"
#include "proxipm/rng.hpp"
#include "test_util.hpp"

using namespace proxipm;

namespace {

double bisect_oracle(const std::function<double(double)>& f, double lo,
                     double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd barrier_gradient(const Eigen::VectorXd& u,
                                 const ConstraintSpec& spec) {
  return std::visit(
      [&](const auto& s) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AffineHalfSpace>) {
          return s.a / (s.b - s.a.dot(u));
        } else if constexpr (std::is_same_v<T, Hyperslab>) {
          const double sigma = s.a.dot(u);
          return s.a / (s.b_max - sigma) - s.a / (sigma - s.b_min);
        } else if constexpr (std::is_same_v<T, Ball>) {
          const Eigen::VectorXd d = u - s.center;
          return 2.0 * d / (s.alpha - d.squaredNorm());
        } else {
          Eigen::VectorXd g(u.size());
          for (Eigen::Index i = 0; i < u.size(); ++i)
            g[i] = 1.0 / (s.x_max - u[i]) - 1.0 / (u[i] - s.x_min);
          return g;
        }
      },
      spec);
}

double stationarity_residual(const Eigen::VectorXd& x,
                             const ConstraintSpec& spec, double mu,
                             double gamma, const Eigen::VectorXd& value) {
  return (value - x + gamma * mu * barrier_gradient(value, spec)).norm();
}

bool strictly_feasible(const Eigen::VectorXd& u, const ConstraintSpec& spec) {
  return std::isfinite(barrier_value(u, spec));
}

ConstraintSpec random_spec(Rng& rng, int variant, int n) {
  switch (variant) {
    case 0: {
      Eigen::VectorXd a = testutil::random_vector(rng, n);
      if (a.norm() < 0.1) a[0] += 1.0;
      return AffineHalfSpace{a, rng.normal()};
    }
    case 1: {
      Eigen::VectorXd a = testutil::random_vector(rng, n);
      if (a.norm() < 0.1) a[0] += 1.0;
      const double bm = rng.normal();
      return Hyperslab{a, bm, bm + 0.1 + std::abs(rng.normal())};
    }
    case 2:
      return Ball{testutil::random_vector(rng, n), rng.uniform(0.1, 5.0)};
    default: {
      const double lo = rng.normal();
      return Box{lo, lo + 0.1 + std::abs(rng.normal())};
    }
  }
}

}  // namespace

TEST_CASE("cubic root: factored cubic with one root in the interval") {
  // (z-1)(z-2)(z-3)
  CHECK(cubic_root_in_interval(1, -6, 11, -6, 1.5, 2.5) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("cubic root matches a bisection oracle") {
  const auto f = [](double z) { return z * z * z - 3 * z * z + z + 0.5; };
  const double want = bisect_oracle(f, 0.0, 1.0);
  const double got = cubic_root_in_interval(1, -3, 1, 0.5, 0.0, 1.0);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  CHECK(got == doctest::Approx(0.7414).epsilon(1e-4));
}

TEST_CASE("cubic root: boundary root at an inclusive lower endpoint") {
  // z(z^2 - 2) over [0, 1)
  CHECK(cubic_root_in_interval(1, 0, -2, 0, 0.0, 1.0) == 0.0);
}

TEST_CASE("cubic root: ill-posed inputs raise") {
  CHECK_THROWS(cubic_root_in_interval(1, -6, 11, -6, 0.5, 3.5));  // three roots
  CHECK_THROWS(cubic_root_in_interval(1, -6, 11, -6, 2.2, 2.8));  // no root
  CHECK_THROWS(cubic_root_in_interval(0, 1, 1, 1, 0.0, 1.0));     // not cubic
}

TEST_CASE("cubic root: residual stays below the stated scale bound") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double r1 = rng.uniform(-2.0, 2.0);
    const double r2 = r1 + rng.uniform(0.5, 3.0);
    const double r3 = r2 + rng.uniform(0.5, 3.0);
    // Monic cubic with the three chosen roots; bracket the middle one.
    const double c2 = -(r1 + r2 + r3);
    const double c1 = r1 * r2 + r1 * r3 + r2 * r3;
    const double c0 = -r1 * r2 * r3;
    const double lo = 0.5 * (r1 + r2), hi = 0.5 * (r2 + r3);
    const double got = cubic_root_in_interval(1, c2, c1, c0, lo, hi);
    const double m = std::max({1.0, std::abs(lo), std::abs(hi)});
    const double scale = std::max({m * m * m, std::abs(c2) * m * m,
                                   std::abs(c1) * m, std::abs(c0)});
    const double residual = std::abs(((got + c2) * got + c1) * got + c0);
    CHECK(residual <= 1e-12 * scale);
    CHECK(got == doctest::Approx(r2).epsilon(1e-9));
  }
}

TEST_CASE("prox_affine closed form on the worked instances") {
  SUBCASE("two dimensions") {
    AffineHalfSpace spec{Eigen::Vector2d(1.0, 0.0), 1.0};
    Eigen::Vector2d x(1.0, 5.0);
    const ProxResult r = prox_affine(x, spec, 1.0, 2.0, false);  // gamma*mu=2
    CHECK(r.value[0] == doctest::Approx(1.0 - std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r.value[1] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(stationarity_residual(x, spec, 1.0, 2.0, r.value) < 1e-12);
  }
  SUBCASE("scalar") {
    AffineHalfSpace spec{Eigen::VectorXd::Ones(1), 1.0};
    Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
    const ProxResult r = prox_affine(x, spec, 0.25, 1.0, false);
    CHECK(r.value[0] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("vanishing barrier keeps interior points, error O(gamma*mu)") {
    AffineHalfSpace spec{Eigen::Vector2d(1.0, 1.0), 1.0};
    Eigen::Vector2d x(-0.5, 0.5);  // b - a^T x = 1
    for (double gm : {1e-4, 1e-6, 1e-8}) {
      const ProxResult r = prox_affine(x, spec, gm, 1.0, false);
      CHECK((r.value - x).norm() <= 2.0 * gm * spec.a.norm());
    }
  }
  SUBCASE("zero direction is rejected") {
    AffineHalfSpace spec{Eigen::Vector2d::Zero(), 1.0};
    CHECK_THROWS_AS(prox_affine(Eigen::Vector2d(1, 1), spec, 1, 1, false),
                    std::invalid_argument);
  }
}

TEST_CASE("prox_hyperslab worked instances") {
  SUBCASE("midpoint is a fixed point for any barrier weight") {
    Hyperslab spec{Eigen::VectorXd::Ones(1), 0.0, 1.0};
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.5);
    for (double gm : {1e-3, 0.5, 10.0}) {
      const ProxResult r = prox_hyperslab(x, spec, gm, 1.0, false);
      CHECK(r.value[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
  SUBCASE("x = 2 with gamma*mu = 1/2 lands on the cubic root") {
    Hyperslab spec{Eigen::VectorXd::Ones(1), 0.0, 1.0};
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 2.0);
    const ProxResult r = prox_hyperslab(x, spec, 0.5, 1.0, false);
    const auto cubic = [](double z) {
      return z * z * z - 3 * z * z + z + 0.5;
    };
    const double want = bisect_oracle(cubic, 0.0, 1.0);
    CHECK(r.kappa == doctest::Approx(want).epsilon(1e-10));
    CHECK(r.value[0] == doctest::Approx(0.7414).epsilon(1e-4));

    // Independent 1-D brute-force minimization of the prox objective.
    ConstraintSpec cs = spec;
    const Eigen::VectorXd oracle = oracles::grid_refine_prox(
        x, 0.5, [&](const Eigen::VectorXd& u) { return barrier_value(u, cs); },
        Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0));
    CHECK(std::abs(r.value[0] - oracle[0]) < 1e-6);
  }
  SUBCASE("barrier-dominated limit flattens onto the slab midline") {
    Hyperslab spec{Eigen::Vector2d(1.0, 2.0), 0.0, 1.0};
    Eigen::Vector2d x(0.3, 0.7);
    const double n2 = spec.a.squaredNorm();
    const ProxResult r = prox_hyperslab(x, spec, 1e4, 1e4, false);
    const Eigen::Vector2d want =
        0.5 * spec.a / n2 + (x - spec.a * (spec.a.dot(x)) / n2);
    CHECK((r.value - want).norm() < 1e-6);
  }
}

TEST_CASE("prox_ball worked instances") {
  SUBCASE("center is a fixed point") {
    Ball spec{Eigen::Vector2d(0.3, -0.2), 0.8};
    const ProxResult r =
        prox_ball(spec.center, spec, 2.0, 1.5, false);
    CHECK((r.value - spec.center).norm() < 1e-12);
    CHECK(r.kappa == 0.0);
  }
  SUBCASE("outside point with gamma*mu = 1/2") {
    Ball spec{Eigen::Vector2d::Zero(), 1.0};
    Eigen::Vector2d x(2.0, 0.0);
    const ProxResult r = prox_ball(x, spec, 0.5, 1.0, false);
    const auto cubic = [](double z) {
      return z * z * z - 2 * z * z - 2 * z + 2;
    };
    const double want = bisect_oracle(cubic, 0.0, 1.0);
    CHECK(r.kappa == doctest::Approx(want).epsilon(1e-10));
    CHECK(r.kappa == doctest::Approx(0.6890).epsilon(1e-4));
    CHECK(r.value[1] == doctest::Approx(0.0));
    CHECK(r.value.norm() == doctest::Approx(r.kappa).epsilon(1e-12));

    ConstraintSpec cs = spec;
    const Eigen::VectorXd oracle = oracles::grid_refine_prox(
        x, 0.5, [&](const Eigen::VectorXd& u) { return barrier_value(u, cs); },
        Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0));
    CHECK((r.value - oracle).norm() < 1e-6);
  }
  SUBCASE("vanishing barrier keeps interior points") {
    Ball spec{Eigen::Vector2d(0.1, 0.1), 1.0};
    Eigen::Vector2d x(0.4, 0.3);
    for (double gm : {1e-4, 1e-7}) {
      const ProxResult r = prox_ball(x, spec, gm, 1.0, false);
      CHECK((r.value - x).norm() < 20.0 * gm);
      CHECK(r.kappa ==
            doctest::Approx((x - spec.center).norm()).epsilon(1e-4));
    }
  }
}

TEST_CASE("prox_box worked instances") {
  const Box box{0.0, 1.0};
  SUBCASE("midpoint vector is unchanged") {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(5, 0.5);
    const ProxResult r = prox_box(x, box, 1.0, 0.7, false);
    CHECK((r.value.array() - 0.5).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("coordinate at 2 reduces to the scalar hyperslab case") {
    Eigen::VectorXd x(2);
    x << 0.5, 2.0;
    const ProxResult r = prox_box(x, box, 0.5, 1.0, false);
    CHECK(r.value[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.value[1] == doctest::Approx(0.7414).epsilon(1e-4));
  }
  SUBCASE("outputs stay strictly interior even for huge inputs") {
    Eigen::VectorXd x(4);
    x << -1e6, 1e6, -42.0, 1e-3;
    for (double gm : {1e-8, 1e-3, 1.0}) {
      const ProxResult r = prox_box(x, box, gm, 1.0, false);
      for (int i = 0; i < 4; ++i) {
        CHECK(r.value[i] > 0.0);
        CHECK(r.value[i] < 1.0);
      }
    }
  }
}

TEST_CASE("interiority and stationarity hold on random instances") {
  Rng rng(101);
  for (int variant = 0; variant < 4; ++variant) {
    for (int trial = 0; trial < 250; ++trial) {
      const int n = 1 + static_cast<int>(rng.next_u64() % 6);
      const ConstraintSpec spec = random_spec(rng, variant, n);
      const Eigen::VectorXd x = testutil::random_vector(rng, n, 2.0);
      const double mu = std::pow(10.0, rng.uniform(-4.0, 1.0));
      const double gamma = std::pow(10.0, rng.uniform(-4.0, 1.0));
      const ProxResult r = prox(x, spec, mu, gamma, false);
      REQUIRE(strictly_feasible(r.value, spec));
      const double residual = stationarity_residual(x, spec, mu, gamma,
                                                    r.value);
      CHECK(residual <= 1e-9 * (1.0 + x.norm()));
    }
  }
}

TEST_CASE("prox values match the brute-force minimization oracle for n <= 2") {
  Rng rng(202);
  for (int variant = 0; variant < 4; ++variant) {
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 1 + static_cast<int>(rng.next_u64() % 2);
      const ConstraintSpec spec = random_spec(rng, variant, n);
      const Eigen::VectorXd x = testutil::random_vector(rng, n, 1.5);
      const double mu = std::pow(10.0, rng.uniform(-2.0, 0.5));
      const double gamma = std::pow(10.0, rng.uniform(-2.0, 0.5));
      const ProxResult r = prox(x, spec, mu, gamma, false);

      const double radius = (x - r.value).norm() + 1.0;
      Eigen::VectorXd lo = x.array() - radius;
      Eigen::VectorXd hi = x.array() + radius;
      const Eigen::VectorXd oracle = oracles::grid_refine_prox(
          x, gamma * mu,
          [&](const Eigen::VectorXd& u) { return barrier_value(u, spec); },
          lo, hi);
      CHECK((r.value - oracle).norm() < 1e-6);
    }
  }
}

TEST_CASE("analytic derivatives match central finite differences") {
  Rng rng(303);
  const double step = 1e-5;
  for (int variant = 0; variant < 4; ++variant) {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + static_cast<int>(rng.next_u64() % 4);
      const ConstraintSpec spec = random_spec(rng, variant, n);
      const Eigen::VectorXd x = testutil::random_vector(rng, n, 1.5);
      const double mu = std::pow(10.0, rng.uniform(-2.0, 0.7));
      const double gamma = std::pow(10.0, rng.uniform(-2.0, 0.7));
      const ProxResult r = prox(x, spec, mu, gamma, true);
      REQUIRE(r.has_derivs());

      const Eigen::VectorXd v = testutil::random_vector(rng, n);
      const Eigen::VectorXd jv = r.apply_jac(v);
      const Eigen::VectorXd fd_jv =
          (prox(x + step * v, spec, mu, gamma, false).value -
           prox(x - step * v, spec, mu, gamma, false).value) /
          (2.0 * step);
      CHECK((jv - fd_jv).norm() <= 1e-5 * std::max(1.0, fd_jv.norm()));

      const Eigen::VectorXd fd_mu =
          (prox(x, spec, mu + step, gamma, false).value -
           prox(x, spec, mu - step, gamma, false).value) /
          (2.0 * step);
      CHECK((*r.grad_mu - fd_mu).norm() <= 1e-5 * std::max(1.0, fd_mu.norm()));

      const Eigen::VectorXd fd_gamma =
          (prox(x, spec, mu, gamma + step, false).value -
           prox(x, spec, mu, gamma - step, false).value) /
          (2.0 * step);
      CHECK((*r.grad_gamma - fd_gamma).norm() <=
            1e-5 * std::max(1.0, fd_gamma.norm()));
    }
  }
}

TEST_CASE("hyperslab sign lemma: b_m + b_M - 2 kappa and kappa - a^T x share "
          "sign") {
  Rng rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 5);
    Eigen::VectorXd a = testutil::random_vector(rng, n);
    if (a.norm() < 0.1) a[0] += 1.0;
    const double bm = rng.normal();
    const Hyperslab spec{a, bm, bm + 0.1 + std::abs(rng.normal())};
    const Eigen::VectorXd x = testutil::random_vector(rng, n, 2.0);
    const double mu = std::pow(10.0, rng.uniform(-4.0, 1.0));
    const double gamma = std::pow(10.0, rng.uniform(-4.0, 1.0));
    const ProxResult r = prox_hyperslab(x, spec, mu, gamma, false);
    const double lhs = spec.b_min + spec.b_max - 2.0 * r.kappa;
    const double rhs = r.kappa - a.dot(x);
    CHECK(lhs * rhs >= -1e-12);
  }
}

TEST_CASE("ball consistency: ||phi - c|| equals kappa") {
  Rng rng(505);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 5);
    const Ball spec{testutil::random_vector(rng, n),
                    rng.uniform(0.1, 5.0)};
    const Eigen::VectorXd x = testutil::random_vector(rng, n, 2.0);
    const double mu = std::pow(10.0, rng.uniform(-4.0, 1.0));
    const double gamma = std::pow(10.0, rng.uniform(-4.0, 1.0));
    const ProxResult r = prox_ball(x, spec, mu, gamma, false);
    CHECK(std::abs((r.value - spec.center).norm() - r.kappa) <= 1e-10);
  }
}

TEST_CASE("want_derivs = false skips all derivative computation") {
  const Box box{0.0, 1.0};
  Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.25);
  const ProxResult r = prox_box(x, box, 0.5, 1.0, false);
  CHECK(!r.has_derivs());
  CHECK(!r.jac_diag.has_value());
  CHECK_THROWS_AS(r.apply_jac(x), std::logic_error);
}

TEST_CASE("degenerate hyperslab preconditions are rejected") {
  Eigen::VectorXd a = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(
      prox_hyperslab(Eigen::Vector2d(0, 0), Hyperslab{a, 1.0, 1.0}, 1, 1,
                     false),
      std::invalid_argument);
  CHECK_THROWS_AS(
      prox_hyperslab(Eigen::Vector2d(0, 0),
                     Hyperslab{Eigen::Vector2d::Zero(), 0.0, 1.0}, 1, 1,
                     false),
      std::invalid_argument);
  CHECK_THROWS_AS(prox_ball(Eigen::Vector2d(0, 0),
                            Ball{Eigen::Vector2d::Zero(), -1.0}, 1, 1, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(prox_box(Eigen::Vector2d(0, 0), Box{1.0, 0.0}, 1, 1, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(prox_box(Eigen::Vector2d(0, 0), Box{0.0, 1.0}, 0.0, 1.0,
                           false),
                  std::invalid_argument);
}
