#include <cmath>

#include "doctest.h"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"
#include "parisi/models.hpp"

using namespace parisi;

TEST_SUITE("models") {
  TEST_CASE("SK covariance and derived quantities") {
    const auto m = MixtureModel::sk();
    CHECK(m.xi(0.5) == 0.25);
    CHECK(m.xi_prime(0.5) == 1.0);
    CHECK(m.xi_second(0.3) == 2.0);
    CHECK(m.theta(0.7) == doctest::Approx(0.49));
    CHECK(m.c2() == 1.0);
    CHECK(m.x_max(0.3) == doctest::Approx(0.6));
    CHECK(m.superlinear());
  }

  TEST_CASE("conjugate of SK in closed form") {
    const auto m = MixtureModel::sk();
    rng::Stream rs(3, 0);
    for (int i = 0; i < 50; ++i) {
      const double y = 3.0 * rs.uniform(), t = 0.05 + 3.0 * rs.uniform();
      const auto r = xi_star(m, y, t);
      CHECK(r.value == doctest::Approx(y * y / (4.0 * t)).epsilon(1e-12));
      CHECK(r.argmax == doctest::Approx(y / (2.0 * t)).epsilon(1e-10));
    }
  }

  TEST_CASE("mixed conjugate against a dense grid") {
    const MixtureModel m({{2, 1.0}, {3, 0.5}, {4, 0.25}});
    for (double y : {0.1, 0.7, 2.0}) {
      for (double t : {0.5, 1.0, 2.0}) {
        double best = 0.0;
        for (int k = 0; k <= 400000; ++k) {
          const double b = k * 1e-5;
          best = std::max(best, y * b - t * m.xi(b));
        }
        CHECK(xi_star(m, y, t).value == doctest::Approx(best).epsilon(1e-8));
      }
    }
  }

  TEST_CASE("restricted conjugate and theta agree along the gradient map") {
    const MixtureModel m({{2, 1.0}, {3, 0.5}});
    for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      CHECK(xi_star_restricted(m, m.xi_prime(x)).value == doctest::Approx(m.theta(x)).epsilon(1e-12));
    }
    const auto sk = MixtureModel::sk();
    CHECK(xi_star_restricted(sk, 3.0).value == doctest::Approx(2.0));
    CHECK(xi_star_restricted(sk, 3.0).argmax == doctest::Approx(1.0));
  }

  TEST_CASE("linear covariance has a divergent conjugate past a_1") {
    const MixtureModel m({{1, 0.5}});
    CHECK_FALSE(m.superlinear());
    CHECK(xi_star(m, 0.4, 1.0).value == doctest::Approx(0.0));
    CHECK_THROWS_AS(xi_star(m, 0.6, 1.0), DivergentConjugate);
  }

  TEST_CASE("alpha perturbation adds to the quadratic term") {
    const auto m = perturb_alpha(MixtureModel({{3, 1.0}}), 0.25);
    CHECK(m.coeff(2) == 0.25);
    CHECK(m.coeff(3) == 1.0);
  }

  TEST_CASE("matrix covariance is entrywise") {
    const MixtureModel m({{2, 1.0}, {3, 0.5}}, 2,
                        SpinDistribution::atoms({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}, {0.25, 0.25, 0.25, 0.25}));
    Eigen::MatrixXd r(2, 2);
    r << 0.5, 0.2, 0.2, 0.3;
    double expect = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) expect += r(i, j) * r(i, j) + 0.5 * std::pow(r(i, j), 3);
    CHECK(m.xi(r) == doctest::Approx(expect));
    const Eigen::MatrixXd g = m.xi_grad(r);
    CHECK(g(0, 1) == doctest::Approx(2 * 0.2 + 1.5 * 0.04));
  }

  TEST_CASE("spin distributions validate their input") {
    CHECK_THROWS_AS(SpinDistribution::atoms({{1.0}, {-1.0}}, {0.5, 0.4}), ValidationError);
    CHECK_THROWS_AS(SpinDistribution::atoms({{1.0}, {-1.0, 0.0}}, {0.5, 0.5}), ValidationError);
    const auto s = SpinDistribution::atoms({{2.0}, {-1.0}}, {0.5, 0.5});
    CHECK(s.max_sq_norm() == 4.0);
  }
}
