#include <cmath>

#include "doctest.h"
#include "parisi/common/parallel.hpp"
#include "parisi/errors.hpp"
#include "parisi/montecarlo.hpp"
#include "parisi/parisi.hpp"

using namespace parisi;

TEST_SUITE("montecarlo") {
  TEST_CASE("log partition matches brute force") {
    const auto h = mc::hamiltonian(MixtureModel({{2, 1.0}, {3, 0.5}}, 1, SpinDistribution::ising()), 7, 3, 0);
    double acc = 0.0;
    for (std::uint32_t s = 0; s < (1u << 7); ++s) acc += std::exp(h.evaluate(s));
    CHECK(mc::log_partition(h) == doctest::Approx(std::log(acc)).epsilon(1e-12));
  }

  TEST_CASE("Hamiltonian covariance") {
    const auto m = MixtureModel::sk();
    std::vector<int> a(8, 1), b(8, 1);
    b[0] = b[1] = -1;
    const auto rows = mc::covariance_check(m, 8, 4000, 2, {{a, a}, {a, b}});
    for (const auto& r : rows) CHECK(r.within);
    CHECK(rows[0].target == doctest::Approx(8.0));
    CHECK(rows[1].target == doctest::Approx(8.0 * 0.25));
  }

  TEST_CASE("free energy vanishes at t = 0") {
    const auto e = mc::sample_free_energy(MixtureModel::sk(), 0.0, 6, 5, 1);
    CHECK(e.mean == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("exact enriched mode at t = 0 equals psi of a Dirac") {
    const auto m = MixtureModel::sk();
    for (double q : {0.2, 0.8}) {
      const auto e = mc::enriched_free_energy(m, 0.0, q, 5, 2, 3, true);
      CHECK(e.mean == doctest::Approx(psi(m, DiscreteMeasure::dirac(q)).value).epsilon(1e-9));
    }
    CHECK_THROWS_AS(mc::enriched_free_energy(m, 0.5, 0.2, 5, 2, 3, true), ValidationError);
  }

  TEST_CASE("sampled enriched mode at t = 0 within noise") {
    const auto m = MixtureModel::sk();
    const auto e = mc::enriched_free_energy(m, 0.0, 0.5, 8, 400, 5);
    const double ref = psi(m, DiscreteMeasure::dirac(0.5)).value;
    CHECK(std::abs(e.mean - ref) <= 4.0 * e.stderr_ + 1e-12);
  }

  TEST_CASE("size and spin limits") {
    CHECK_THROWS_AS(mc::sample_free_energy(MixtureModel::sk(), 1.0, mc::kMaxSpins + 1, 2, 1), SizeLimit);
    const MixtureModel general({{2, 1.0}}, 1, SpinDistribution::scalar_atoms({-1.0, 0.0, 1.0}, {0.3, 0.4, 0.3}));
    CHECK_THROWS_AS(mc::sample_free_energy(general, 1.0, 6, 2, 1), UnsupportedDimension);
  }

  TEST_CASE("results do not depend on the thread count") {
    const auto m = MixtureModel::sk();
    par::set_max_threads(1);
    const auto a = mc::sample_free_energy(m, 1.0, 10, 16, 42);
    par::set_max_threads(0);
    const auto b = mc::sample_free_energy(m, 1.0, 10, 16, 42);
    CHECK(a.values == b.values);
  }

  TEST_CASE("Potts perturbation bound") {
    const auto rep = mc::potts_perturbation_check(MixtureModel::sk(), 0.5, 8, {0.0, 0.5}, 60, 3);
    CHECK(rep.bound == doctest::Approx(0.5));
    CHECK(rep.rows.size() == 2);
    CHECK(rep.steps.size() == 1);
  }
}
