#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"
#include "parisi/parisi.hpp"

using namespace parisi;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double kL = 12.0;

double gauss_expect(const std::function<double(double)>& f) {
  const double c = 1.0 / std::sqrt(2.0 * M_PI);
  return gauss_kronrod<double, 31>::integrate([&](double z) { return c * std::exp(-0.5 * z * z) * f(z); }, -kL, kL,
                                              12, 1e-14);
}

double log_cosh(double x) { return std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x))) - std::log(2.0); }

// Two-level Ising oracle by nested adaptive quadrature.
double psi_two_level(double q0, double q1, double zeta) {
  const double s0 = std::sqrt(2.0 * q0), s1 = std::sqrt(2.0 * (q1 - q0));
  auto y0 = [&](double x) {
    return std::log(gauss_expect([&](double z) { return std::exp(zeta * (log_cosh(x + s1 * z) - q1)); })) / zeta;
  };
  return -gauss_expect([&](double z) { return y0(s0 * z); });
}

}  // namespace

TEST_SUITE("parisi") {
  TEST_CASE("Dirac measures against direct quadrature") {
    const auto m = MixtureModel::sk();
    CHECK(psi(m, DiscreteMeasure::dirac(0.0)).value == 0.0);
    for (double q : {0.05, 0.25, 0.5, 1.0, 2.0}) {
      const double direct = q - gauss_expect([&](double z) { return log_cosh(std::sqrt(2.0 * q) * z); });
      CHECK(psi(m, DiscreteMeasure::dirac(q)).value == doctest::Approx(direct).epsilon(1e-12));
    }
  }

  TEST_CASE("two-level measures against nested quadrature") {
    const auto m = MixtureModel::sk();
    for (auto [q0, q1, z] : {std::tuple{0.2, 0.6, 0.5}, std::tuple{0.0, 0.5, 0.3}, std::tuple{0.4, 0.45, 0.8},
                             std::tuple{0.1, 1.2, 0.05}}) {
      const double rec = psi(m, DiscreteMeasure({q0, q1}, {z, 1.0 - z})).value;
      CHECK(rec == doctest::Approx(psi_two_level(q0, q1, z)).epsilon(1e-9));
    }
  }

  TEST_CASE("general scalar spins against direct quadrature") {
    const std::vector<double> s{-1.0, 0.0, 2.0}, w{0.3, 0.5, 0.2};
    const MixtureModel m({{2, 1.0}}, 1, SpinDistribution::scalar_atoms(s, w));
    for (double q : {0.1, 0.7}) {
      const double direct = -gauss_expect([&](double z) {
        double acc = 0.0;
        for (std::size_t a = 0; a < s.size(); ++a) acc += w[a] * std::exp(std::sqrt(2.0 * q) * z * s[a] - q * s[a] * s[a]);
        return std::log(acc);
      });
      CHECK(psi(m, DiscreteMeasure::dirac(q)).value == doctest::Approx(direct).epsilon(1e-10));
    }
    const MixtureModel ising_as_atoms({{2, 1.0}}, 1, SpinDistribution::scalar_atoms({-1.0, 1.0}, {0.5, 0.5}));
    const DiscreteMeasure mu({0.1, 0.3, 0.8}, {0.2, 0.5, 0.3});
    CHECK(psi(ising_as_atoms, mu).value == doctest::Approx(psi(MixtureModel::sk(), mu).value).epsilon(1e-13));
  }

  TEST_CASE("raw paths: repeated atoms are the identity") {
    const auto m = MixtureModel::sk();
    const double merged = psi(m, DiscreteMeasure({0.2, 0.6}, {0.4, 0.6})).value;
    CHECK(psi_path(m, {0.2, 0.2, 0.6}, {0.1, 0.4}).value == doctest::Approx(merged).epsilon(1e-13));
  }

  TEST_CASE("grid refinement does not move the value") {
    const auto m = MixtureModel::sk();
    const DiscreteMeasure mu({0.05, 0.3, 0.31, 0.9}, {0.1, 0.3, 0.2, 0.4});
    PsiOptions fine;
    fine.grid_step = 0.01;
    CHECK(psi(m, mu).value == doctest::Approx(psi(m, mu, fine).value).epsilon(1e-10));
  }

  TEST_CASE("small exponents are continuous") {
    const auto m = MixtureModel::sk();
    // Straddle the switch between the two level formulas: no jump in the
    // first difference.
    auto at = [&](double z) { return psi(m, DiscreteMeasure({0.2, 0.6}, {z, 1.0 - z})).value; };
    const double h = 1e-7;
    const double a = at(0.05 - h), b = at(0.05 + h), c = at(0.05 + 3 * h);
    CHECK(std::abs((b - a) - (c - b)) <= 1e-11);
    const double tiny = psi(m, DiscreteMeasure({0.2, 0.6}, {1e-300, 1.0})).value;
    CHECK(tiny == doctest::Approx(psi(m, DiscreteMeasure::dirac(0.6)).value).epsilon(1e-10));
  }

  TEST_CASE("cascade sampler") {
    const auto w = sample_cascade_weights({0.3, 0.7}, 200, 5);
    CHECK(w.size() == 200 * 200);
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
    for (double v : w) CHECK(v >= 0.0);
    const auto m = MixtureModel::sk();
    const DiscreteMeasure mu({0.3, 0.7}, {0.4, 0.6});
    const auto est = psi_cascade_mc(m, mu, {1000, 11}, 100);
    CHECK(est.method == PsiValue::Method::cascade_mc);
    CHECK(std::abs(est.value - psi(m, mu).value) <= 4.0 * est.stderr_);
    CHECK_THROWS_AS(psi_cascade_mc(m, DiscreteMeasure({0.1, 0.2, 0.3, 0.4}, {0.25, 0.25, 0.25, 0.25}), {}, 2),
                    UnsupportedCascade);
  }

  TEST_CASE("family psi_* and the search mode") {
    const auto m = MixtureModel::sk();
    std::vector<DiscreteMeasure> ms{DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(0.5),
                                    DiscreteMeasure({0.2, 0.9}, {0.5, 0.5})};
    const auto fam = make_family(m, ms);
    const PLConvexFn chi({0.0, 1.0}, {1.0});
    const auto r = psi_star(chi, fam);
    double expect = 1e300;
    for (const auto& f : fam) expect = std::min(expect, chi.integrate(f.mu) - f.psi);
    CHECK(r.value == doctest::Approx(expect));
    CHECK(r.evaluated == 3);
    CHECK_THROWS_AS(psi_star(m, [](double x) { return 0.5 * x; }, PsiStarSearch{}), DivergenceDetected);
  }

  TEST_CASE("psi needs D = 1") {
    const MixtureModel m({{2, 1.0}}, 2, SpinDistribution::atoms({{1.0, 1.0}, {-1.0, -1.0}}, {0.5, 0.5}));
    CHECK_THROWS_AS(psi(m, DiscreteMeasure::dirac(0.1)), UnsupportedDimension);
  }
}
