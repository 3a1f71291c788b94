#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"
#include "parisi/hopf.hpp"

using namespace parisi;

namespace {

PLConvexFn random_chi(rng::Stream& rs, double x_hi) {
  const std::size_t m = 1 + rs.below(6);
  std::vector<double> knots(m + 1, 0.0);
  for (std::size_t k = 1; k < m; ++k) knots[k] = x_hi * rs.uniform();
  knots[m] = x_hi;
  std::sort(knots.begin(), knots.end());
  for (std::size_t k = 1; k <= m; ++k) knots[k] = std::max(knots[k], knots[k - 1] + 1e-3);
  std::vector<double> inc(m);
  double s = 0.0;
  for (double& d : inc) s += d = rs.uniform();
  const double total = rs.uniform();
  for (double& d : inc) d *= total / s;
  return PLConvexFn::from_increments(knots, inc);
}

}  // namespace

TEST_SUITE("hopf") {
  TEST_CASE("PLConvexFn validation and evaluation") {
    CHECK_THROWS_AS(PLConvexFn({0.0, 1.0}, {1.5}), ValidationError);
    CHECK_THROWS_AS(PLConvexFn({0.0, 1.0, 2.0}, {0.5, 0.2}), ValidationError);
    CHECK_THROWS_AS(PLConvexFn({0.1, 1.0}, {0.5}), ValidationError);
    const PLConvexFn chi({0.0, 1.0, 2.0}, {0.2, 0.6});
    CHECK(chi(0.5) == doctest::Approx(0.1));
    CHECK(chi(1.5) == doctest::Approx(0.2 + 0.3));
    CHECK(chi(3.0) == doctest::Approx(0.2 + 0.6 + 0.6));
    const auto same = PLConvexFn::from_values({0.0, 1.0, 2.0}, {0.0, 0.2, 0.8});
    CHECK(same.slopes()[1] == doctest::Approx(0.6));
  }

  TEST_CASE("conjugate and biconjugate") {
    rng::Stream rs(21, 0);
    for (int i = 0; i < 50; ++i) {
      const PLConvexFn chi = random_chi(rs, 2.0);
      const PLConjugate conj(chi);
      CHECK(conj.domain_max() == doctest::Approx(chi.max_slope()));
      for (int k = 0; k <= 40; ++k) {
        const double x = 0.075 * k;
        CHECK(conj.biconjugate(x) == doctest::Approx(chi(x)).epsilon(1e-12));
      }
      CHECK_THROWS_AS(conj(chi.max_slope() + 0.1), ValidationError);
    }
  }

  TEST_CASE("S_t chi against a brute-force scan over y") {
    const auto model = MixtureModel::sk();
    rng::Stream rs(22, 0);
    for (int i = 0; i < 20; ++i) {
      const PLConvexFn chi = random_chi(rs, 2.0);
      for (double t : {0.1, 1.0}) {
        for (double x : {0.0, 0.4, 1.7}) {
          double best = -1e300;
          for (int k = 0; k <= 200000; ++k) {
            const double y = k * 4e-5 * t * 2.0;
            best = std::max(best, chi(x + y) - y * y / (4.0 * t));
          }
          CHECK(s_t_sup(model, chi, t, x).value == doctest::Approx(best).epsilon(1e-8));
        }
      }
    }
  }

  TEST_CASE("S_t at t = 0, monotonicity in t and 1-Lipschitz in x") {
    const auto model = MixtureModel::sk();
    rng::Stream rs(23, 0);
    for (int i = 0; i < 20; ++i) {
      const PLConvexFn chi = random_chi(rs, 2.0);
      CHECK(s_t_sup(model, chi, 0.0, 0.7).value == chi(0.7));
      double prev = chi(0.3);
      for (double t : {0.1, 0.5, 1.0, 2.0}) {
        const double v = s_t_sup(model, chi, t, 0.3).value;
        CHECK(v >= prev - 1e-14);
        prev = v;
        const double a = s_t_sup(model, chi, t, 0.5).value, b = s_t_sup(model, chi, t, 0.9).value;
        CHECK(b - a <= 0.4 + 1e-12);
        CHECK(b >= a - 1e-14);
      }
    }
  }

  TEST_CASE("gradient-parameterized form equals S_t in one dimension") {
    const MixtureModel model({{2, 1.0}, {3, 0.5}});
    rng::Stream rs(24, 0);
    std::vector<double> dirs;
    for (int k = 0; k <= 20; ++k) dirs.push_back(k / 20.0);
    for (int i = 0; i < 20; ++i) {
      const PLConvexFn chi = random_chi(rs, 1.5);
      for (double t : {0.3, 1.0}) {
        // Slopes stay below 1 = c^2, so the optimizer lies inside the ball.
        const double direct = s_t_sup(model, chi, t, 0.2).value;
        CHECK(tilde_s_t(chi, model, t, 0.2, dirs).value == doctest::Approx(direct).epsilon(1e-9));
        CHECK(s_t_hopf(model, chi, t, 0.2).value == doctest::Approx(direct).epsilon(1e-12));
      }
    }
    const std::function<double(double)> zero = [](double) { return 0.0; };
    CHECK_THROWS_AS(tilde_s_t(zero, model, 1.0, 0.0, std::vector<double>{}), EmptyDirections);
  }

  TEST_CASE("matrix form with 1x1 matrices equals the scalar form") {
    const auto model = MixtureModel::sk();
    const PLConvexFn chi({0.0, 0.5, 2.0}, {0.1, 0.7});
    std::vector<Eigen::MatrixXd> dirs;
    std::vector<double> sd;
    for (int k = 0; k <= 200; ++k) {
      dirs.push_back(Eigen::MatrixXd::Constant(1, 1, k / 200.0));
      sd.push_back(k / 200.0);
    }
    const auto m = tilde_s_t([&](const Eigen::MatrixXd& x) { return chi(x(0, 0)); }, model, 0.5,
                             Eigen::MatrixXd::Constant(1, 1, 0.1), dirs);
    const auto s = tilde_s_t([&](double x) { return chi(x); }, model, 0.5, 0.1, sd, false);
    CHECK(m.value == doctest::Approx(s.value).epsilon(1e-14));
  }

  TEST_CASE("lift and project") {
    const FinitePath x{{0.1, 0.4, 0.4, 0.9}};
    CHECK(project(4, lift(x)).x == x.x);
    const Path q = Path::linear(0.0, 1.0);
    for (std::size_t j : {1u, 3u, 5u}) CHECK(l1_distance(lift(project(j, q)), q) == doctest::Approx(0.25 / j));
    CHECK(pairing_l2(lift(x), lift(x)) == doctest::Approx(pairing_j(x, x)));
    CHECK(Path::from_measure(DiscreteMeasure({0.2, 0.5}, {0.25, 0.75}))(0.5) == 0.5);
  }

  TEST_CASE("finite-dimensional HJ value") {
    const auto model = MixtureModel::sk();
    const PLConvexFn chi({0.0, 1.0}, {0.5});
    const auto r = hj_finite_dim(model, chi, 1.0, FinitePath{{0.1, 0.5}});
    CHECK(r.separable == doctest::Approx(r.hopf).epsilon(1e-12));
    CHECK_THROWS_AS(hj_finite_dim(model, chi, 1.0, FinitePath{{0.5, 0.1}}), ValidationError);
  }

  TEST_CASE("order witness search") {
    const auto none = find_order_violation([](double x) { return 0.5 * x + std::max(0.0, x - 0.3); }, 1.0, 500, 3);
    CHECK_FALSE(none.found);
    const auto some = find_order_violation([](double x) { return -x; }, 1.0, 500, 3);
    CHECK(some.found);
    CHECK(measure_leq(some.lower, some.upper));
  }
}
