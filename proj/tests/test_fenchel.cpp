#include <cmath>

#include "doctest.h"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"
#include "parisi/fenchel.hpp"

using namespace parisi;
using namespace parisi::fenchel;

namespace {

DiscreteMeasure random_measure(rng::Stream& r, std::size_t n, double hi) {
  std::vector<double> a(n), w(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = hi * r.uniform();
    s += (w[i] = r.uniform() + 0.05);
  }
  for (double& x : w) x /= s;
  return DiscreteMeasure(a, w);
}

}  // namespace

TEST_SUITE("fenchel") {
  TEST_CASE("grid function evaluation and norms") {
    const GridFunction g({0.0, 1.0, 2.0}, {0.5, 1.5, 1.0});
    CHECK(g(0.5) == doctest::Approx(1.0));
    CHECK(g(3.0) == doctest::Approx(0.5));
    CHECK(g.lipschitz() == doctest::Approx(1.0));
    CHECK(g.dual_norm() == doctest::Approx(1.0));
    CHECK(g.integrate(DiscreteMeasure({0.0, 2.0}, {0.5, 0.5})) == doctest::Approx(0.75));
    CHECK(GridFunction::constant(-2.0).dual_norm() == doctest::Approx(2.0));
  }

  TEST_CASE("dual norm check separates bounded and unbounded") {
    const auto ok = dual_norm_check(GridFunction({0.0, 1.0}, {0.3, -0.4}), 500, 3);
    CHECK(ok.bounded);
    CHECK(ok.sample_min >= -1e-12);
    const auto bad = dual_norm_check(GridFunction({0.0, 1.0}, {0.0, -2.0}), 500, 3);
    CHECK_FALSE(bad.bounded);
    CHECK(bad.rate < 0.0);
  }

  TEST_CASE("affine phi is its own biconjugate") {
    const GridFunction chi({0.0, 0.5, 1.0}, {0.0, 0.2, 0.1});
    auto phi = [&](const DiscreteMeasure& mu) { return chi.integrate(mu) + 0.3; };
    rng::Stream r(2, 0);
    std::vector<DiscreteMeasure> fam;
    for (int i = 0; i < 20; ++i) fam.push_back(random_measure(r, 2, 1.0));
    CHECK(concave_conjugate(phi, chi, fam) == doctest::Approx(-0.3).epsilon(1e-14));
    std::vector<DiscreteMeasure> tests(fam.begin(), fam.begin() + 5);
    const auto rep = fm_roundtrip(phi, {chi}, tests, fam);
    CHECK(rep.max_abs_diff < 1e-12);
    CHECK(rep.min_excess >= -1e-12);
  }

  TEST_CASE("barycenter and mixture distance") {
    ScalarMixture eta{{DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(1.0)}, {0.25, 0.75}};
    CHECK(barycenter(eta) == DiscreteMeasure({0.0, 1.0}, {0.25, 0.75}));
    ScalarMixture a{{DiscreteMeasure::dirac(0.0)}, {1.0}};
    ScalarMixture b{{DiscreteMeasure::dirac(0.4)}, {1.0}};
    CHECK(mixture_distance(a, b) == doctest::Approx(0.4));
    CHECK(mixture_distance(eta, eta) == doctest::Approx(0.0).epsilon(1e-12));
    // The barycenter map is 1-Lipschitz.
    CHECK(w1_distance(barycenter(eta), barycenter(a)) <= mixture_distance(eta, a) + 1e-12);
  }

  TEST_CASE("Jensen check rejects non-monotone barycenters") {
    Eigen::MatrixXd p(2, 2), q(2, 2);
    p << 1.0, 0.0, 0.0, 0.0;
    q << 0.0, 0.0, 0.0, 1.0;
    MatrixMixture eta{{MatrixAtomsMeasure({p, q}, {0.5, 0.5})}, {1.0}};
    auto phi = [](const MatrixAtomsMeasure&) { return 0.0; };
    CHECK_THROWS_AS(jensen_check(phi, eta), PreconditionViolated);
  }

  TEST_CASE("small extreme-set search finds no counterexample") {
    const auto rep = extreme_set_search(300, 9);
    CHECK(rep.trials == 300);
    CHECK(rep.counterexamples == 0);
  }

  TEST_CASE("concave extension is a lower bound and exact on the family") {
    auto phi = [](const DiscreteMeasure& mu) { return -std::abs(mu.mean() - 0.5); };
    rng::Stream r(4, 0);
    std::vector<DiscreteMeasure> fam;
    std::vector<double> vals;
    for (int i = 0; i < 25; ++i) {
      fam.push_back(random_measure(r, 2, 1.0));
      vals.push_back(phi(fam.back()));
    }
    for (int i = 0; i < 5; ++i) {
      const auto res = extend_phi(fam, vals, fam[i]);
      CHECK(res.value == doctest::Approx(vals[i]).epsilon(1e-9));
    }
    for (int i = 0; i < 10; ++i) {
      const auto mp = random_measure(r, 3, 1.0);
      CHECK(extend_phi(fam, vals, mp).value <= phi(mp) + 1e-9);
    }
  }

  TEST_CASE("empirical measures converge in W1") {
    const DiscreteMeasure mu({0.0, 0.3, 1.0}, {0.2, 0.5, 0.3});
    const auto rows = empirical_convergence(mu, {10, 100, 1000}, 17, 30);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].mean_w1 > rows[2].mean_w1);
    CHECK(rows[2].median_w1 < 0.05);
  }
}
