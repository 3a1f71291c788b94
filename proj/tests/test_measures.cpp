#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"
#include "parisi/measures.hpp"

using namespace parisi;

namespace {

DiscreteMeasure random_measure(rng::Stream& rs, std::size_t max_atoms, double hi) {
  const std::size_t n = 1 + rs.below(max_atoms);
  std::vector<double> a(n), w(n);
  double s = 0.0;
  for (double& x : a) x = hi * rs.uniform();
  for (double& x : w) s += x = 0.05 + rs.uniform();
  for (double& x : w) x /= s;
  return DiscreteMeasure(a, w);
}

// W1 on the line as the integral of |F_mu - F_nu| on a fine grid.
double w1_by_cdf(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<double> pts = mu.atoms();
  pts.insert(pts.end(), nu.atoms().begin(), nu.atoms().end());
  std::sort(pts.begin(), pts.end());
  auto cdf = [](const DiscreteMeasure& m, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m.atoms()[i] <= x) s += m.weights()[i];
    return s;
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += (pts[i + 1] - pts[i]) * std::abs(cdf(mu, pts[i]) - cdf(nu, pts[i]));
  return total;
}

}  // namespace

TEST_SUITE("measures") {
  TEST_CASE("canonical form: sorted, merged, zero weights dropped") {
    const DiscreteMeasure mu({0.5, 0.1, 0.5, 0.3}, {0.25, 0.25, 0.25, 0.25});
    CHECK(mu.atoms() == std::vector<double>{0.1, 0.3, 0.5});
    CHECK(mu.weights()[2] == doctest::Approx(0.5));
    const DiscreteMeasure nu({0.2, 0.4}, {0.0, 1.0});
    CHECK(nu.size() == 1);
    CHECK(DiscreteMeasure() == DiscreteMeasure::dirac(0.0));
  }

  TEST_CASE("invalid measures are rejected") {
    CHECK_THROWS_AS(DiscreteMeasure({-0.1}, {1.0}), ValidationError);
    CHECK_THROWS_AS(DiscreteMeasure({0.1, 0.2}, {0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(DiscreteMeasure({}, {}), ValidationError);
    CHECK_THROWS_AS(DiscreteMeasure({0.1}, {std::nan("")}), ValidationError);
  }

  TEST_CASE("paths, cuts and quantiles") {
    const DiscreteMeasure mu = DiscreteMeasure::from_path({0.0, 0.3, 1.0}, {0.2, 0.7});
    CHECK(mu.weights()[0] == doctest::Approx(0.3));
    const auto c = mu.cuts();
    CHECK(c.front() == 0.0);
    CHECK(c.back() == 1.0);
    CHECK(mu.quantile(0.1) == 0.2);
    CHECK(mu.quantile(0.5) == 0.7);
    CHECK(mu.quantile(1.0) == 0.7);
    CHECK(mu.mean() == doctest::Approx(0.3 * 0.2 + 0.7 * 0.7));
  }

  TEST_CASE("mixtures are linear in the weights") {
    const DiscreteMeasure a({0.1, 0.4}, {0.5, 0.5}), b({0.4, 0.9}, {0.2, 0.8});
    const auto m = DiscreteMeasure::mixture({{0.25, a}, {0.75, b}});
    CHECK(m.mean() == doctest::Approx(0.25 * a.mean() + 0.75 * b.mean()));
    CHECK(m.size() == 3);
  }

  TEST_CASE("W1 against the CDF formula and transport LP") {
    rng::Stream rs(5, 0);
    for (int i = 0; i < 100; ++i) {
      const auto mu = random_measure(rs, 6, 2.0), nu = random_measure(rs, 6, 2.0);
      const double w = w1_distance(mu, nu);
      CHECK(w == doctest::Approx(w1_by_cdf(mu, nu)).epsilon(1e-12));
      const double lp = transport_cost(mu.weights(), nu.weights(), [&](std::size_t a, std::size_t b) {
        return std::abs(mu.atoms()[a] - nu.atoms()[b]);
      });
      CHECK(lp == doctest::Approx(w).epsilon(1e-9));
      CHECK(w1_distance(mu, mu) == 0.0);
    }
  }

  TEST_CASE("matrix W1 of 1x1 measures reduces to the scalar one") {
    rng::Stream rs(6, 0);
    for (int i = 0; i < 20; ++i) {
      const auto mu = random_measure(rs, 4, 1.0), nu = random_measure(rs, 4, 1.0);
      CHECK(w1_distance(MatrixAtomsMeasure::from_scalar(mu), MatrixAtomsMeasure::from_scalar(nu)) ==
            doctest::Approx(w1_distance(mu, nu)).epsilon(1e-9));
    }
  }

  TEST_CASE("KR norm: LP, closed form and special cases") {
    CHECK(kr_norm(SignedAtoms({0.3, 1.1}, {1.0, -1.0})) == doctest::Approx(0.8));
    CHECK(kr_norm(SignedAtoms({2.0}, {1.0})) == doctest::Approx(1.0 + 2.0));
    CHECK(kr_norm_closed_form(SignedAtoms({2.0}, {-0.5})) == doctest::Approx(1.5));
    rng::Stream rs(7, 0);
    for (int i = 0; i < 50; ++i) {
      const auto mu = random_measure(rs, 5, 2.0), nu = random_measure(rs, 5, 2.0);
      const auto d = SignedAtoms::difference(mu, nu);
      CHECK(d.total_mass() == doctest::Approx(0.0).epsilon(1e-14));
      CHECK(kr_norm(d) == doctest::Approx(w1_distance(mu, nu)).epsilon(1e-9));
    }
  }

  TEST_CASE("matrix KR norm of 1x1 atoms equals the scalar LP") {
    const std::vector<Eigen::MatrixXd> a{Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 1.5)};
    CHECK(kr_norm(a, {1.0, -0.4}) == doctest::Approx(kr_norm(SignedAtoms({0.5, 1.5}, {1.0, -0.4}))).epsilon(1e-9));
  }

  TEST_CASE("cone order") {
    const DiscreteMeasure lo({0.1, 0.5}, {0.5, 0.5}), hi({0.2, 0.6}, {0.5, 0.5});
    CHECK(measure_leq(lo, hi));
    CHECK_FALSE(measure_leq(hi, lo));
    CHECK(measure_leq(lo, lo));
    // Same mean, more spread: larger in the order, not the reverse.
    const DiscreteMeasure spread({0.0, 0.6}, {0.5, 0.5}), point({0.3}, {1.0});
    CHECK(measure_leq(point, spread));
  }

  TEST_CASE("PSD helpers and monotone support") {
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 1.0, 0.0, 0.0, 0.0;
    b << 2.0, 0.0, 0.0, 1.0;
    CHECK(is_psd(a));
    CHECK(psd_leq(a, b));
    CHECK_FALSE(psd_leq(b, a));
    Eigen::MatrixXd c(2, 2);
    c << 0.0, 0.0, 0.0, 1.0;
    CHECK(is_monotone_support(MatrixAtomsMeasure({a, b}, {0.5, 0.5})));
    CHECK_FALSE(is_monotone_support(MatrixAtomsMeasure({a, c}, {0.5, 0.5})));
  }
}
