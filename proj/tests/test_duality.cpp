#include <cmath>

#include "doctest.h"
#include "parisi/common/rng.hpp"
#include "parisi/duality.hpp"
#include "parisi/errors.hpp"

using namespace parisi;

namespace {

DiscreteMeasure random_measure(rng::Stream& r, std::size_t n, double hi) {
  std::vector<double> a(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = hi * r.uniform();
    w[i] = r.uniform() + 0.05;
  }
  double s = 0.0;
  for (double x : w) s += x;
  for (double& x : w) x /= s;
  return DiscreteMeasure(a, w);
}

PLConvexFn random_chi(rng::Stream& r, std::size_t m, double hi) {
  std::vector<double> knots(m + 1), inc(m);
  for (std::size_t k = 0; k <= m; ++k) knots[k] = hi * static_cast<double>(k) / static_cast<double>(m);
  double s = 0.0;
  for (double& d : inc) s += (d = r.uniform());
  const double top = r.uniform();
  for (double& d : inc) d *= top / s;
  return PLConvexFn::from_increments(knots, inc);
}

}  // namespace

TEST_SUITE("duality") {
  TEST_CASE("SK penalty is sum w q^2 / 4t") {
    const auto m = MixtureModel::sk();
    const DiscreteMeasure nu({0.1, 0.4, 0.9}, {0.2, 0.5, 0.3});
    for (double t : {0.1, 0.5, 2.0}) {
      const double expect = (0.2 * 0.01 + 0.5 * 0.16 + 0.3 * 0.81) / (4.0 * t);
      CHECK(parisi_penalty(m, t, nu) == doctest::Approx(expect).epsilon(1e-14));
    }
  }

  TEST_CASE("lower value at delta_0 is zero") {
    const auto m = MixtureModel::sk();
    CHECK(eval_lower(m, 0.7, DiscreteMeasure::dirac(0.0)) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(eval_lower(m, 0.0, DiscreteMeasure::dirac(0.1)), ValidationError);
  }

  TEST_CASE("family-relative upper value dominates every lower value on the family") {
    const auto m = MixtureModel::sk();
    rng::Stream r(11, 0);
    for (double t : {0.2, 1.0}) {
      std::vector<DiscreteMeasure> ms;
      for (int i = 0; i < 40; ++i) ms.push_back(random_measure(r, 1 + i % 3, 3.0 * t));
      const auto fam = make_family(m, ms);
      const HopfLax op(m, t);
      for (int c = 0; c < 10; ++c) {
        const auto chi = random_chi(r, 8, 2.0 * t);
        const auto up = eval_upper(op, chi, fam);
        for (const auto& f : fam) CHECK(eval_lower(m, t, f) <= up.value + 1e-8);
      }
    }
  }

  TEST_CASE("lattice family stays inside [0, x_hi]") {
    const auto fam = lattice_family(1.5, 5);
    CHECK(fam.size() > 5);
    for (const auto& mu : fam) {
      CHECK(mu.atoms().front() >= 0.0);
      CHECK(mu.max_atom() <= 1.5 + 1e-15);
    }
  }

  TEST_CASE("solver closes the gap at delta_0 below the critical time") {
    SolverOptions o;
    o.levels = 2;
    o.knots = 16;
    o.restarts = 2;
    o.max_evals_per_start = 400;
    o.max_cut_rounds = 15;
    const auto rep = solve_gap(MixtureModel::sk(), 0.15, o);
    CHECK(rep.lower <= rep.upper + 1e-9);
    CHECK(std::abs(rep.lower) < 1e-6);
    // The upper side is limited by the 16-knot chi grid.
    CHECK(rep.upper >= -1e-9);
    CHECK(rep.upper < 1e-4);
    CHECK(rep.lower_argmax.max_atom() < 1e-3);
    CHECK(rep.psi_star_family_bound);
  }

  TEST_CASE("cutting-plane LP bound sits below the attained value") {
    const auto m = MixtureModel::sk();
    rng::Stream r(5, 1);
    std::vector<DiscreteMeasure> ms = lattice_family(2.0, 5);
    for (int i = 0; i < 60; ++i) ms.push_back(random_measure(r, 2, 2.0));
    const auto fam = make_family(m, ms);
    UpperProblem p;
    p.t = 1.0;
    for (int k = 0; k <= 16; ++k) p.knots.push_back(2.0 * k / 16.0);
    const auto res = minimize_upper(m, p, fam);
    CHECK(res.lp_bound <= res.value + 1e-8);
    CHECK(res.chi.max_slope() <= 1.0 + 1e-12);
    const auto up = eval_upper(HopfLax(m, 1.0), res.chi, fam);
    CHECK(up.value == doctest::Approx(res.value).epsilon(1e-7));
  }

  TEST_CASE("D = 1 vector upper value brackets the lower values") {
    const auto m = MixtureModel::sk();
    const double t = 0.6;
    std::vector<Eigen::MatrixXd> dirs;
    for (int i = 0; i <= 4; ++i) dirs.push_back(Eigen::MatrixXd::Constant(1, 1, 0.25 * i));
    std::vector<DirectionMeasure> fam{{{0}, {1.0}}, {{2}, {1.0}}, {{1, 3}, {0.5, 0.5}}, {{0, 4}, {0.3, 0.7}}};
    MatrixPsiOracle oracle = [&](const MatrixAtomsMeasure& mu) {
      std::vector<double> a, w;
      for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        a.push_back(mu.atoms[i](0, 0));
        w.push_back(mu.weights[i]);
      }
      return psi(m, DiscreteMeasure(a, w)).value;
    };
    MatrixChi chi = [](const Eigen::MatrixXd& x) { return 0.5 * std::max(0.0, x(0, 0) - 0.2); };
    const auto res = eval_upper_vector(oracle, m, t, chi, dirs, fam);
    CHECK(res.bracket_holds);
    CHECK(res.best_lower <= res.upper + 1e-9);
    CHECK_THROWS_AS(eval_upper_vector(oracle, m, t, chi, {}, fam), EmptyDirections);
  }
}
