#include "parisi/acceptance.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "parisi/common/parallel.hpp"
#include "parisi/common/rng.hpp"
#include "parisi/duality.hpp"
#include "parisi/errors.hpp"
#include "parisi/fenchel.hpp"
#include "parisi/hopf.hpp"
#include "parisi/io.hpp"
#include "parisi/measures.hpp"
#include "parisi/models.hpp"
#include "parisi/montecarlo.hpp"
#include "parisi/parisi.hpp"

namespace parisi::acceptance {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PLConvexFn random_chi(rng::Stream& rs, double x_hi, std::size_t max_pieces = 8) {
  const std::size_t m = 1 + rs.below(max_pieces);
  std::vector<double> knots(m + 1, 0.0);
  for (std::size_t k = 1; k < m; ++k) knots[k] = x_hi * rs.uniform();
  knots[m] = x_hi;
  std::sort(knots.begin(), knots.end());
  for (std::size_t k = 1; k <= m; ++k) knots[k] = std::max(knots[k], knots[k - 1] + 1e-3 * x_hi);
  std::vector<double> inc(m);
  double s = 0.0;
  for (double& d : inc) s += d = rs.uniform() < 0.2 ? 0.0 : rs.uniform();
  const double total = rs.uniform();
  if (s > 0.0)
    for (double& d : inc) d *= total / s;
  return PLConvexFn::from_increments(knots, inc);
}

DiscreteMeasure random_measure(rng::Stream& rs, std::size_t max_atoms, double x_hi) {
  const std::size_t n = 1 + rs.below(max_atoms);
  std::vector<double> a(n), w(n);
  double s = 0.0;
  for (double& x : a) x = x_hi * rs.uniform();
  for (double& x : w) s += x = 0.05 + rs.uniform();
  for (double& x : w) x /= s;
  return DiscreteMeasure(a, w);
}

// E log cosh(sqrt(2q) G) by exp-sinh quadrature of the even integrand.
double log_cosh_average(double q) {
  if (q == 0.0) return 0.0;
  const double s = std::sqrt(2.0 * q);
  auto f = [s](double g) {
    const double x = s * g;
    const double lc = x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
    return 2.0 * std::exp(-0.5 * g * g) / std::sqrt(2.0 * M_PI) * lc;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 0.0, kInf, 1e-15);
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

CriterionResult start(int id, const char* title, double budget) {
  CriterionResult r;
  r.id = id;
  r.title = title;
  r.budget = budget;
  return r;
}

// ---------------------------------------------------------------- 1

CriterionResult hopf_equality(const Options& o) {
  CriterionResult r = start(1, "Hopf representation equals the sup form", 30.0);
  const auto model = MixtureModel::sk();
  const std::vector<double> ts{0.1, 1.0, 10.0};
  const std::size_t n_chi = 100, n_x = 50;
  std::vector<double> worst(n_chi, 0.0);
  par::parallel_for(n_chi, [&](std::size_t i) {
    rng::Stream rs(o.seed, 100 + i);
    const PLConvexFn chi = random_chi(rs, 2.0);
    const PLConjugate conj(chi);
    for (double t : ts) {
      const HopfLax op(model, t);
      for (std::size_t k = 0; k < n_x; ++k) {
        const double x = 2.5 * static_cast<double>(k) / (n_x - 1);
        const double d = std::abs(s_t_sup(op, chi, x).value - s_t_hopf(model, conj, t, x).value);
        worst[i] = std::max(worst[i], d);
      }
    }
  });
  const double m = *std::max_element(worst.begin(), worst.end());
  r.checks = m <= 1e-6;
  r.summary = fmt("max |sup - hopf| = %.2e over %zu functions x 3 t x %zu points", m, n_chi, n_x);
  r.details = {{"max_abs_diff", m}, {"tolerance", 1e-6}};
  return r;
}

// ---------------------------------------------------------------- 2

CriterionResult psi_base_case(const Options&) {
  CriterionResult r = start(2, "psi base case against direct quadrature", 1.0);
  const auto model = MixtureModel::sk();
  double m = 0.0;
  json rows = json::array();
  for (double q : {0.0, 0.25, 0.5, 1.0}) {
    const double rec = psi(model, DiscreteMeasure::dirac(q)).value;
    const double direct = q - log_cosh_average(q);
    m = std::max(m, std::abs(rec - direct));
    rows.push_back({{"q", q}, {"recursion", rec}, {"direct", direct}});
  }
  r.checks = m <= 1e-10;
  r.summary = fmt("max |recursion - quadrature| = %.2e", m);
  r.details = {{"rows", rows}, {"max_abs_diff", m}};
  return r;
}

// ---------------------------------------------------------------- 3

CriterionResult cascade_oracle(const Options& o) {
  CriterionResult r = start(3, "cascade Monte Carlo against the recursion", 60.0);
  const auto model = MixtureModel::sk();
  const DiscreteMeasure mu({0.2, 0.6}, {0.5, 0.5});
  const double rec = psi(model, mu).value;
  const PsiValue mc = psi_cascade_mc(model, mu, {2000, o.seed + 3}, 200);
  const double z = std::abs(rec - mc.value) / mc.stderr_;
  r.checks = z <= 3.0;
  r.summary = fmt("recursion %.6f, MC %.6f +- %.6f (%.2f stderr)", rec, mc.value, mc.stderr_, z);
  r.details = {{"recursion", rec}, {"mc", io::to_json(mc)}, {"z", z}};
  return r;
}

// ---------------------------------------------------------------- 4

CriterionResult weak_duality(const Options& o) {
  CriterionResult r = start(4, "weak-duality bracket", 120.0);
  const auto model = MixtureModel::sk();
  const std::size_t n = 1000;
  std::size_t violations = 0;
  double worst = -kInf;
  json per_t = json::array();
  for (double t : {0.3, 1.0, 3.0}) {
    const double x_hi = 1.5 * model.x_max(t);
    std::vector<DiscreteMeasure> nus;
    std::vector<PLConvexFn> chis;
    rng::Stream rs(o.seed, 400 + static_cast<std::uint64_t>(10 * t));
    for (std::size_t i = 0; i < n; ++i) {
      nus.push_back(random_measure(rs, 5, x_hi));
      chis.push_back(random_chi(rs, x_hi));
    }
    const auto family = make_family(model, nus);
    const HopfLax op(model, t);
    std::vector<double> excess(n);
    par::parallel_for(n, [&](std::size_t i) {
      excess[i] = eval_lower(model, t, family[i]) - eval_upper(op, chis[i], family).value;
    });
    std::size_t v = 0;
    double w = -kInf;
    for (double e : excess) {
      v += e > 1e-8;
      w = std::max(w, e);
    }
    violations += v;
    worst = std::max(worst, w);
    per_t.push_back({{"t", t}, {"violations", v}, {"max_lower_minus_upper", w}});
  }
  r.checks = violations == 0;
  r.summary = fmt("%zu violations in %zu pairs, max lower - upper = %.2e", violations, 3 * n, worst);
  r.details = {{"per_t", per_t}};
  return r;
}

// ---------------------------------------------------------------- 5, 6

bool is_dirac_zero(const DiscreteMeasure& mu) {
  double off = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.atoms()[i] > 1e-6) off += mu.weights()[i];
  return off <= 1e-6;
}

json mc_json(const mc::FreeEnergyEstimate& e) {
  return {{"N", e.N}, {"samples", e.n_samples}, {"mean", e.mean}, {"stderr", e.stderr_}, {"seed", e.seed}};
}

CriterionResult sk_high_temperature(const Options& o) {
  CriterionResult r = start(5, "high-temperature SK closure at t = 0.3", 300.0);
  const auto model = MixtureModel::sk();
  SolverOptions so;
  so.levels = 4;
  so.knots = 64;
  so.seed = o.seed + 5;
  const SolverReport rep = solve_gap(model, 0.3, so);
  const bool lower_ok = std::abs(rep.lower) <= 1e-6;
  const bool upper_ok = std::abs(rep.upper) <= 1e-6;
  const bool dirac_ok = is_dirac_zero(rep.lower_argmax);
  bool mc_ok = true;
  json mcs = json::array();
  std::string mc_text;
  for (std::size_t N : {10, 14, 18}) {
    const auto e = mc::sample_free_energy(model, 0.3, N, 200, o.seed + 50 + N);
    const bool ok = std::abs(e.mean) <= 3.0 * e.stderr_;
    mc_ok = mc_ok && ok;
    auto j = mc_json(e);
    j["within_3_stderr_of_0"] = ok;
    mcs.push_back(j);
    mc_text += fmt(" N=%zu:%.4f+-%.4f", N, e.mean, e.stderr_);
  }
  r.checks = lower_ok && upper_ok && dirac_ok && mc_ok;
  r.summary = fmt("lower %.3e, upper %.3e, argmax delta_0: %s;", rep.lower, rep.upper, dirac_ok ? "yes" : "no") +
              mc_text;
  r.details = {{"report", io::to_json(rep)}, {"lower_ok", lower_ok}, {"upper_ok", upper_ok},
               {"argmax_is_delta_0", dirac_ok}, {"mc", mcs}, {"mc_ok", mc_ok}};
  return r;
}

CriterionResult sk_low_temperature(const Options& o) {
  CriterionResult r = start(6, "low-temperature SK gap at t = 1", 900.0);
  const auto model = MixtureModel::sk();
  SolverOptions so;
  so.seed = o.seed + 6;
  const SolverReport rep = solve_gap(model, 1.0, so);
  const double mid = 0.5 * (rep.lower + rep.upper);
  const auto e = mc::sample_free_energy(model, 1.0, 18, 200, o.seed + 68);
  const bool gap_ok = rep.gap <= 5e-3 && !rep.nonconvergence;
  const bool band_ok = std::abs(mid - e.mean) <= 0.05;
  r.checks = gap_ok && band_ok;

  // Not part of the check: weighted fit F_N = a + b N^(-2/3) over N = 8..20.
  double s00 = 0.0, s01 = 0.0, s11 = 0.0, r0 = 0.0, r1 = 0.0;
  json trend = json::array();
  for (std::size_t N = 8; N <= 20; N += 2) {
    const auto f = N == 18 ? e : mc::sample_free_energy(model, 1.0, N, 200, o.seed + 60 + N);
    const double x = std::pow(static_cast<double>(N), -2.0 / 3.0), w = 1.0 / (f.stderr_ * f.stderr_);
    s00 += w;
    s01 += w * x;
    s11 += w * x * x;
    r0 += w * f.mean;
    r1 += w * x * f.mean;
    trend.push_back(mc_json(f));
  }
  const double det = s00 * s11 - s01 * s01;
  const double a = (s11 * r0 - s01 * r1) / det, a_se = std::sqrt(s11 / det);

  r.summary = fmt("gap %.2e, midpoint %.5f, MC N=18 %.4f +- %.4f (|diff| %.4f vs 0.05); N^-2/3 extrapolation %.4f +- %.4f",
                  rep.gap, mid, e.mean, e.stderr_, std::abs(mid - e.mean), a, a_se);
  r.details = {{"report", io::to_json(rep)}, {"midpoint", mid}, {"mc", mc_json(e)}, {"gap_ok", gap_ok},
               {"band_ok", band_ok}, {"mc_trend", trend}, {"extrapolated", a}, {"extrapolated_stderr", a_se}};
  return r;
}

// ---------------------------------------------------------------- 7

CriterionResult conjugate_round_trip(const Options& o) {
  CriterionResult r = start(7, "conjugate round trip of psi at t = 0", 300.0);
  const auto model = MixtureModel::sk();
  const std::size_t n_mu = 10, n_random = 1000, n_near = 300, m = 64;
  double worst = 0.0;
  json rows = json::array();
  for (std::size_t i = 0; i < n_mu; ++i) {
    rng::Stream rs(o.seed, 700 + i);
    std::vector<double> a(3), w(3);
    double s = 0.0;
    for (double& x : a) x = rs.uniform();
    for (double& x : w) s += x = 0.1 + rs.uniform();
    for (double& x : w) x /= s;
    std::sort(a.begin(), a.end());
    const DiscreteMeasure mu(a, w);
    // Family: the q-lattice, random 3-atom measures and small moves of mu.
    std::vector<DiscreteMeasure> fam = lattice_family(1.0, 6);
    fam.push_back(mu);
    for (std::size_t k = 0; k < n_random; ++k) {
      std::vector<double> b(3), v(3);
      double z = 0.0;
      for (double& x : b) x = rs.uniform();
      for (double& x : v) z += x = 0.05 + rs.uniform();
      for (double& x : v) x /= z;
      fam.emplace_back(b, v);
    }
    for (std::size_t k = 0; k < n_near; ++k) {
      const double eps = 0.05 * rs.uniform();
      std::vector<double> b = a, v = w;
      const std::size_t j = k % 3;
      b[j] = std::clamp(b[j] + (rs.uniform() < 0.5 ? -eps : eps), 0.0, 1.0);
      if (k % 2) {
        const double d = std::min(v[j], eps);
        v[j] -= d;
        v[(j + 1) % 3] += d;
      }
      fam.emplace_back(b, v);
    }
    const auto family = make_family(model, fam);
    UpperProblem p;
    p.t = 0.0;
    p.base = mu;
    p.final_slope_one = false;
    for (std::size_t k = 0; k <= m; ++k) p.knots.push_back(static_cast<double>(k) / m);
    const UpperResult u = minimize_upper(model, p, family);
    const double ps = psi(model, mu).value;
    worst = std::max(worst, std::abs(u.value - ps));
    rows.push_back({{"mu", io::to_json(mu)}, {"psi", ps}, {"min_over_chi", u.value}, {"converged", u.converged},
                    {"family_size", family.size()}});
  }
  r.checks = worst <= 1e-4;
  r.summary = fmt("max |min_chi - psi| = %.2e over %zu measures (family of %zu)", worst, n_mu,
                  rows.back()["family_size"].get<std::size_t>());
  r.details = {{"rows", rows}, {"max_abs_diff", worst}};
  return r;
}

// ---------------------------------------------------------------- 8

CriterionResult discretization(const Options& o) {
  CriterionResult r = start(8, "path discretization", 10.0);
  rng::Stream rs(o.seed, 800);
  bool lift_ok = true;
  double pairing_diff = 0.0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const std::size_t j = 1 + rs.below(32);
    FinitePath x;
    for (std::size_t i = 0; i < j; ++i) x.x.push_back(rs.normal());
    const FinitePath back = project(j, lift(x));
    lift_ok = lift_ok && back.x == x.x;

    // Step path with dyadic cuts and values, so both sides are exact.
    const std::size_t n = 1 + rs.below(8);
    std::vector<double> cuts{0.0, 1.0};
    for (std::size_t k = 1; k < n; ++k) cuts.push_back(static_cast<double>(rs.below(64)) / 64.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> vals;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) vals.push_back(static_cast<double>(rs.below(64)) / 8.0);
    const Path q = Path::step(cuts, vals);
    const std::size_t jj = std::size_t{1} << rs.below(5);
    FinitePath y;
    for (std::size_t i = 0; i < jj; ++i) y.x.push_back(static_cast<double>(rs.below(32)) / 4.0);
    pairing_diff = std::max(pairing_diff, std::abs(pairing_l2(q, lift(y)) - pairing_j(project(jj, q), y)));
  }
  double l1_err = 0.0;
  json l1 = json::array();
  for (std::size_t j : {2, 4, 8, 16}) {
    const Path q = Path::linear(0.0, 1.0);
    const double d = l1_distance(lift(project(j, q)), q);
    l1_err = std::max(l1_err, std::abs(d - 0.25 / j));
    l1.push_back({{"j", j}, {"l1", d}, {"expected", 0.25 / j}});
  }
  const auto model = MixtureModel::sk();
  double hj_diff = 0.0;
  std::size_t hj_fail = 0;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const PLConvexFn chi = random_chi(rs, 2.0);
    const double t = 0.1 + 2.9 * rs.uniform();
    FinitePath x;
    const std::size_t j = 1 + rs.below(8);
    for (std::size_t i = 0; i < j; ++i) x.x.push_back(2.0 * rs.uniform());
    std::sort(x.x.begin(), x.x.end());
    try {
      const HjFiniteResult h = hj_finite_dim(model, chi, t, x);
      hj_diff = std::max(hj_diff, std::abs(h.separable - h.hopf));
    } catch (const SeparabilityViolation&) {
      ++hj_fail;
    }
  }
  r.checks = lift_ok && pairing_diff == 0.0 && l1_err <= 1e-12 && hj_fail == 0 && hj_diff <= 1e-8;
  r.summary = fmt("p_j l_j = id: %s; pairing diff %.1e; L1 err %.1e; hj max diff %.1e (%zu violations)",
                  lift_ok ? "exact" : "no", pairing_diff, l1_err, hj_diff, hj_fail);
  r.details = {{"project_lift_identity", lift_ok}, {"pairing_max_diff", pairing_diff}, {"l1", l1},
               {"hj_max_diff", hj_diff}, {"hj_violations", hj_fail}};
  return r;
}

// ---------------------------------------------------------------- 9

CriterionResult kr(const Options& o) {
  CriterionResult r = start(9, "KR norm LP against the closed form", 10.0);
  rng::Stream rs(o.seed, 900);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rs.below(10);
    std::vector<double> a(n), w(n);
    for (double& x : a) x = 3.0 * rs.uniform();
    for (double& x : w) x = rs.normal();
    const SignedAtoms nu(a, w);
    worst = std::max(worst, std::abs(kr_norm(nu) - kr_norm_closed_form(nu)));
  }
  bool dirac_exact = true;
  double dirac_diff = 0.0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const double a = 3.0 * rs.uniform(), b = 3.0 * rs.uniform();
    const double d = std::abs(kr_norm(SignedAtoms({a, b}, {1.0, -1.0})) - std::abs(a - b));
    dirac_diff = std::max(dirac_diff, d);
    dirac_exact = dirac_exact && d == 0.0;
  }
  r.checks = worst <= 1e-9 && dirac_exact;
  r.summary = fmt("max |LP - closed form| = %.2e; |delta_a - delta_b| max diff %.1e", worst, dirac_diff);
  r.details = {{"max_abs_diff", worst}, {"dirac_max_diff", dirac_diff}};
  return r;
}

// ---------------------------------------------------------------- 10

fenchel::GridFunction random_grid_function(rng::Stream& rs, double x_hi) {
  const std::size_t n = 2 + rs.below(5);
  std::vector<double> nodes{0.0}, vals{rs.normal() * 0.5};
  for (std::size_t k = 1; k < n; ++k) {
    nodes.push_back(nodes.back() + x_hi / (n - 1));
    vals.push_back(vals.back() + (2.0 * rs.uniform() - 1.0) * (x_hi / (n - 1)));
  }
  return fenchel::GridFunction(nodes, vals);
}

CriterionResult fenchel_moreau(const Options& o) {
  CriterionResult r = start(10, "Fenchel-Moreau round trip", 30.0);
  rng::Stream rs(o.seed, 1000);
  std::vector<fenchel::AffinePiece> pieces;
  for (int l = 0; l < 3; ++l) pieces.push_back({random_grid_function(rs, 2.0), 0.3 * rs.normal()});
  const auto phi_c = fenchel::ConcaveFunctional::min_of_affine(pieces);
  const std::function<double(const DiscreteMeasure&)> phi = [&](const DiscreteMeasure& mu) { return phi_c(mu); };

  std::vector<fenchel::GridFunction> chis;
  for (const auto& p : pieces) chis.push_back(p.chi);
  for (int k = 0; k < 20; ++k) chis.push_back(random_grid_function(rs, 2.0));
  std::vector<DiscreteMeasure> family = lattice_family(2.0, 6);
  for (int k = 0; k < 200; ++k) family.push_back(random_measure(rs, 4, 2.0));
  std::vector<DiscreteMeasure> tests;
  for (int k = 0; k < 20; ++k) tests.push_back(random_measure(rs, 4, 2.0));
  const fenchel::FmReport fm = fenchel::fm_roundtrip(phi, chis, tests, family);

  const auto control = fenchel::find_concavity_witness(phi, chis, family, 2000, o.seed + 10);
  // |mean - 1| is convex along mixtures.
  const std::function<double(const DiscreteMeasure&)> bad = [](const DiscreteMeasure& mu) {
    return std::abs(mu.mean() - 1.0);
  };
  const auto wit = fenchel::find_concavity_witness(bad, chis, family, 2000, o.seed + 11);
  bool confirmed = false;
  if (wit.found) {
    const DiscreteMeasure mix = DiscreteMeasure::mixture({{wit.lambda, wit.mu1}, {1.0 - wit.lambda, wit.mu2}});
    confirmed = bad(mix) < wit.lambda * bad(wit.mu1) + (1.0 - wit.lambda) * bad(wit.mu2) - 1e-9;
  }
  r.checks = fm.max_abs_diff <= 1e-6 && !control.found && wit.found && confirmed;
  r.summary = fmt("max |phi** - phi| = %.2e at 20 measures; witness for |mean - 1|: %s (excess %.3f); none for phi: %s",
                  fm.max_abs_diff, wit.found && confirmed ? "found" : "missing", wit.excess,
                  control.found ? "no" : "yes");
  r.details = {{"max_abs_diff", fm.max_abs_diff},      {"min_excess", fm.min_excess},
               {"witness_found", wit.found},           {"witness_confirmed", confirmed},
               {"witness_excess", wit.excess},         {"witness_trials", wit.trials},
               {"control_excess", control.excess}};
  return r;
}

// ---------------------------------------------------------------- 11

// Splits a chain measure into components supported on the same chain.
fenchel::MatrixMixture split_chain(rng::Stream& rs, const std::vector<Eigen::MatrixXd>& chain,
                                   const std::vector<double>& mass, std::size_t parts) {
  const std::size_t n = chain.size();
  std::vector<std::vector<double>> alloc(parts, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (auto& row : alloc) s += row[k] = rs.uniform() < 0.3 ? 0.0 : rs.uniform();
    if (s == 0.0) s = alloc[0][k] = 1.0;
    for (auto& row : alloc) row[k] *= mass[k] / s;
  }
  fenchel::MatrixMixture eta;
  for (auto& row : alloc) {
    double w = 0.0;
    for (double x : row) w += x;
    if (w <= 0.0) continue;
    std::vector<Eigen::MatrixXd> atoms;
    std::vector<double> ws;
    for (std::size_t k = 0; k < n; ++k)
      if (row[k] > 0.0) {
        atoms.push_back(chain[k]);
        ws.push_back(row[k] / w);
      }
    eta.support.emplace_back(atoms, ws);
    eta.weights.push_back(w);
  }
  return eta;
}

CriterionResult mixtures(const Options& o) {
  CriterionResult r = start(11, "Jensen, extreme set and concave extension", 120.0);
  const auto model = MixtureModel::sk();
  rng::Stream rs(o.seed, 1100);

  // Jensen: 50 instances of a 2 x 2 min-of-affine functional and 50 of psi.
  std::vector<Eigen::MatrixXd> B;
  std::vector<double> c;
  for (int l = 0; l < 3; ++l) {
    Eigen::MatrixXd m(2, 2);
    m << rs.normal(), rs.normal(), 0.0, rs.normal();
    m(1, 0) = m(0, 1);
    B.push_back(m);
    c.push_back(rs.normal());
  }
  const fenchel::MatrixFunctional affine_min = [&](const MatrixAtomsMeasure& mu) {
    double best = kInf;
    for (std::size_t l = 0; l < B.size(); ++l)
      best = std::min(best, mu.integrate([&](const Eigen::MatrixXd& x) { return (B[l] * x).trace(); }) + c[l]);
    return best;
  };
  const fenchel::MatrixFunctional psi_1x1 = [&](const MatrixAtomsMeasure& mu) {
    std::vector<double> a;
    for (const auto& x : mu.atoms) a.push_back(x(0, 0));
    return psi(model, DiscreteMeasure(a, mu.weights)).value;
  };
  std::size_t jensen_ok = 0, jensen_n = 100;
  double jensen_worst = -kInf;
  for (std::size_t trial = 0; trial < jensen_n; ++trial) {
    const bool scalar = trial >= jensen_n / 2;
    const std::size_t n = 2 + rs.below(3);
    std::vector<Eigen::MatrixXd> chain;
    std::vector<double> mass(n);
    Eigen::MatrixXd cur = Eigen::MatrixXd::Zero(scalar ? 1 : 2, scalar ? 1 : 2);
    for (std::size_t k = 0; k < n; ++k) {
      if (scalar) {
        cur(0, 0) += 0.5 * rs.uniform();
      } else {
        Eigen::MatrixXd L(2, 2);
        L << rs.normal(), 0.0, rs.normal(), rs.normal();
        cur += 0.2 * L * L.transpose();
      }
      chain.push_back(cur);
    }
    double s = 0.0;
    for (double& m : mass) s += m = 0.1 + rs.uniform();
    for (double& m : mass) m /= s;
    const auto eta = split_chain(rs, chain, mass, 2 + rs.below(3));
    const auto res = fenchel::jensen_check(scalar ? psi_1x1 : affine_min, eta);
    jensen_ok += res.holds;
    jensen_worst = std::max(jensen_worst, res.mean_of_phi - res.phi_of_bar);
  }

  const auto ext = fenchel::extreme_set_search(10000, o.seed + 11);

  std::vector<DiscreteMeasure> fam;
  for (int k = 0; k < 30; ++k) fam.push_back(random_measure(rs, 3, 1.5));
  std::vector<double> phi_vals;
  for (const auto& f : make_family(model, fam)) phi_vals.push_back(f.psi);
  double ext_worst = 0.0;
  for (std::size_t i = 0; i < fam.size(); ++i)
    ext_worst = std::max(ext_worst, std::abs(fenchel::extend_phi(fam, phi_vals, fam[i]).value - phi_vals[i]));

  r.checks = jensen_ok == jensen_n && ext.counterexamples == 0 && ext_worst <= 1e-4;
  r.summary = fmt("Jensen %zu/%zu; extreme-set counterexamples %zu in %zu; extension max diff %.2e", jensen_ok,
                  jensen_n, ext.counterexamples, ext.trials, ext_worst);
  r.details = {{"jensen_holds", jensen_ok},
               {"jensen_instances", jensen_n},
               {"jensen_max_mean_minus_bar", jensen_worst},
               {"extreme_trials", ext.trials},
               {"extreme_counterexamples", ext.counterexamples},
               {"chain_trials", ext.chain_trials},
               {"chain_failures", ext.chain_failures},
               {"extension_max_diff", ext_worst}};
  return r;
}

// ---------------------------------------------------------------- 12

CriterionResult continuity(const Options& o) {
  CriterionResult r = start(12, "theta identity, alpha and Potts continuity", 300.0);
  const auto model = MixtureModel::sk();
  const auto mixed = MixtureModel({{2, 1.0}, {3, 0.5}, {4, 0.25}});
  double theta_err = 0.0;
  for (const auto* m : {&model, &mixed})
    for (int i = 0; i <= 1000; ++i) {
      const double x = i * 1e-3;
      theta_err = std::max(theta_err, std::abs(m->theta(x) - xi_star_restricted(*m, m->xi_prime(x)).value));
    }

  SolverOptions so;
  so.levels = 2;
  so.knots = 32;
  so.restarts = 4;
  so.seed = o.seed + 12;
  const double t_alpha = 0.5;
  const AlphaScan scan = alpha_continuity_scan(model, t_alpha, {0.0, 0.1, 0.2}, so);
  double max_slope = 0.0;
  for (double s : scan.slopes) max_slope = std::max(max_slope, s);

  const mc::PottsReport potts = mc::potts_perturbation_check(model, 1.0, 12, {0.0, 0.25, 0.5, 1.0}, 200, o.seed + 120);
  double potts_slope = 0.0;
  for (const auto& s : potts.steps) potts_slope = std::max(potts_slope, std::abs(s.slope));

  r.checks = theta_err <= 1e-8 && scan.within_bound && potts.within_bound;
  r.summary = fmt("theta err %.1e; alpha slopes max %.3f (bound %.1f); Potts max slope %.3f (bound %.1f)", theta_err,
                  max_slope, scan.bound, potts_slope, potts.bound);
  json rows = json::array();
  for (const auto& a : scan.rows) rows.push_back({{"alpha", a.alpha}, {"lower", a.lower}, {"upper", a.upper}});
  json steps = json::array();
  for (const auto& s : potts.steps)
    steps.push_back({{"alpha0", s.alpha0}, {"alpha1", s.alpha1}, {"diff", s.diff}, {"diff_stderr", s.diff_stderr},
                     {"slope", s.slope}, {"within", s.within}});
  r.details = {{"theta_max_err", theta_err}, {"alpha_rows", rows}, {"alpha_slopes", scan.slopes},
               {"alpha_bound", scan.bound},  {"potts_steps", steps}, {"potts_bound", potts.bound},
               {"potts_monotone", potts.monotone}};
  return r;
}

// ---------------------------------------------------------------- 13

CriterionResult psi_structure(const Options& o) {
  CriterionResult r = start(13, "psi is 1-Lipschitz, monotone and concave", 120.0);
  const auto model = MixtureModel::sk();
  const std::size_t n = 100;
  std::vector<double> lip(n), mono(n), conc(n);
  par::parallel_for(n, [&](std::size_t i) {
    rng::Stream rs(o.seed, 1300 + i);
    const DiscreteMeasure a = random_measure(rs, 4, 2.0), b = random_measure(rs, 4, 2.0);
    lip[i] = std::abs(psi(model, a).value - psi(model, b).value) - w1_distance(a, b);

    std::vector<double> up = a.atoms();
    for (double& x : up) x += rs.uniform() < 0.5 ? 0.0 : 0.5 * rs.uniform();
    const DiscreteMeasure hi(up, a.weights());
    mono[i] = measure_leq(a, hi) ? psi(model, a).value - psi(model, hi).value : kInf;

    const double lambda = rs.uniform();
    const DiscreteMeasure c = random_measure(rs, 4, 2.0);
    const DiscreteMeasure mix = DiscreteMeasure::mixture({{lambda, a}, {1.0 - lambda, c}});
    conc[i] = lambda * psi(model, a).value + (1.0 - lambda) * psi(model, c).value - psi(model, mix).value;
  });
  const double l = *std::max_element(lip.begin(), lip.end());
  const double m = *std::max_element(mono.begin(), mono.end());
  const double c = *std::max_element(conc.begin(), conc.end());
  r.checks = l <= 1e-8 && m <= 1e-8 && c <= 1e-8;
  r.summary = fmt("max excess: Lipschitz %.2e, monotone %.2e, concave %.2e", l, m, c);
  r.details = {{"lipschitz_max_excess", l}, {"monotone_max_excess", m}, {"concavity_max_excess", c}};
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, const Options& options) {
  using Fn = CriterionResult (*)(const Options&);
  static const Fn table[kCriteria] = {hopf_equality, psi_base_case,  cascade_oracle, weak_duality, sk_high_temperature,
                                      sk_low_temperature, conjugate_round_trip, discretization, kr, fenchel_moreau,
                                      mixtures, continuity, psi_structure};
  if (id < 1 || id > kCriteria) throw ValidationError("acceptance: criterion must be in 1..13");
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = table[id - 1](options);
  } catch (const std::exception& e) {
    r.id = id;
    r.title = "criterion " + std::to_string(id);
    r.checks = false;
    r.summary = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> run_all(const Options& options) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriteria; ++id) out.push_back(run_criterion(id, options));
  return out;
}

std::string format_line(const CriterionResult& r) {
  std::string s = fmt("criterion %02d %s  %7.1f s / %g s  %s: ", r.id, r.pass() ? "PASS" : "FAIL", r.seconds,
                      r.budget, r.title.c_str());
  s += r.summary;
  if (r.checks && r.seconds > r.budget) s += " [over time budget]";
  return s;
}

json to_json(const CriterionResult& r) {
  return {{"id", r.id},         {"title", r.title},     {"pass", r.pass()},    {"checks", r.checks},
          {"seconds", r.seconds}, {"budget", r.budget}, {"summary", r.summary}, {"details", r.details}};
}

}  // namespace parisi::acceptance
