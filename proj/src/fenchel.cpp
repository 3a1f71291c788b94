#include "parisi/fenchel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "parisi/common/lp.hpp"
#include "parisi/common/parallel.hpp"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"

namespace parisi::fenchel {

// ------------------------------------------------------------ GridFunction

GridFunction::GridFunction(std::vector<double> nodes, std::vector<double> values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
  if (nodes_.empty() || nodes_.size() != values_.size())
    throw ValidationError("GridFunction: need matching nonempty nodes and values");
  if (nodes_.front() != 0.0) throw ValidationError("GridFunction: first node must be 0");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i]) || !std::isfinite(values_[i])) throw ValidationError("GridFunction: non-finite entry");
    if (i > 0 && !(nodes_[i] > nodes_[i - 1])) throw ValidationError("GridFunction: nodes must increase");
  }
}

GridFunction GridFunction::from(const PLConvexFn& chi) { return GridFunction(chi.knots(), chi.values()); }

GridFunction GridFunction::constant(double c) { return GridFunction({0.0}, {c}); }

double GridFunction::operator()(double x) const {
  if (x < 0.0) throw ValidationError("GridFunction: x must be >= 0");
  const std::size_t n = nodes_.size();
  if (n == 1) return values_[0];
  if (x >= nodes_.back()) {
    const double s = (values_[n - 1] - values_[n - 2]) / (nodes_[n - 1] - nodes_[n - 2]);
    return values_[n - 1] + s * (x - nodes_[n - 1]);
  }
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const double f = (x - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
  return values_[i] + f * (values_[i + 1] - values_[i]);
}

double GridFunction::integrate(const DiscreteMeasure& mu) const {
  return mu.integrate([this](double x) { return (*this)(x); });
}

double GridFunction::integrate(const SignedAtoms& nu) const {
  double s = 0.0;
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) s += nu.weights[i] * (*this)(nu.atoms[i]);
  return s;
}

double GridFunction::lipschitz() const {
  double L = 0.0;
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
    L = std::max(L, std::abs(values_[i + 1] - values_[i]) / (nodes_[i + 1] - nodes_[i]));
  return L;
}

double GridFunction::dual_norm() const { return std::max(std::abs(values_[0]), lipschitz()); }

// ------------------------------------------------------- ConcaveFunctional

ConcaveFunctional ConcaveFunctional::min_of_affine(std::vector<AffinePiece> pieces) {
  if (pieces.empty()) throw ValidationError("min_of_affine: need at least one piece");
  ConcaveFunctional f;
  for (const auto& p : pieces) f.lipschitz_ = std::max(f.lipschitz_, p.chi.dual_norm());
  f.pieces_ = std::move(pieces);
  return f;
}

ConcaveFunctional ConcaveFunctional::oracle(std::function<double(const DiscreteMeasure&)> fn, double lipschitz) {
  if (!fn) throw ValidationError("oracle: empty callback");
  if (!(lipschitz >= 0.0)) throw ValidationError("oracle: Lipschitz constant must be >= 0");
  ConcaveFunctional f;
  f.oracle_ = std::move(fn);
  f.lipschitz_ = lipschitz;
  return f;
}

double ConcaveFunctional::operator()(const DiscreteMeasure& mu) const {
  if (oracle_) return oracle_(mu);
  double v = std::numeric_limits<double>::infinity();
  for (const auto& p : pieces_) v = std::min(v, p.chi.integrate(mu) + p.c);
  return v;
}

// ---------------------------------------------------------- round trips

double concave_conjugate(const std::function<double(const DiscreteMeasure&)>& phi, const GridFunction& chi,
                         const std::vector<DiscreteMeasure>& family) {
  if (family.empty()) throw ValidationError("concave_conjugate: empty family");
  double v = std::numeric_limits<double>::infinity();
  for (const auto& mu : family) v = std::min(v, chi.integrate(mu) - phi(mu));
  return v;
}

namespace {

std::vector<double> conjugates(const std::function<double(const DiscreteMeasure&)>& phi,
                               const std::vector<GridFunction>& chis, const std::vector<DiscreteMeasure>& family) {
  std::vector<double> phi_fam(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) phi_fam[i] = phi(family[i]);
  std::vector<double> out(chis.size());
  par::parallel_for(chis.size(), [&](std::size_t c) {
    double v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < family.size(); ++i) v = std::min(v, chis[c].integrate(family[i]) - phi_fam[i]);
    out[c] = v;
  });
  return out;
}

double biconjugate(const std::vector<GridFunction>& chis, const std::vector<double>& phi_star,
                   const DiscreteMeasure& mu) {
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < chis.size(); ++c) v = std::min(v, chis[c].integrate(mu) - phi_star[c]);
  return v;
}

}  // namespace

FmReport fm_roundtrip(const std::function<double(const DiscreteMeasure&)>& phi, const std::vector<GridFunction>& chis,
                      const std::vector<DiscreteMeasure>& mus, std::vector<DiscreteMeasure> family, double tolerance) {
  if (chis.empty()) throw ValidationError("fm_roundtrip: empty chi grid");
  if (mus.empty()) throw ValidationError("fm_roundtrip: no test measures");
  family.insert(family.end(), mus.begin(), mus.end());
  const std::vector<double> phi_star = conjugates(phi, chis, family);
  FmReport rep;
  rep.min_excess = std::numeric_limits<double>::infinity();
  for (const auto& mu : mus) {
    FmRow row{mu, phi(mu), biconjugate(chis, phi_star, mu)};
    rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(row.phi_star_star - row.phi));
    rep.min_excess = std::min(rep.min_excess, row.phi_star_star - row.phi);
    rep.rows.push_back(std::move(row));
  }
  rep.family_too_coarse = rep.max_abs_diff > tolerance;
  return rep;
}

ConcavityWitness find_concavity_witness(const std::function<double(const DiscreteMeasure&)>& phi,
                                        const std::vector<GridFunction>& chis,
                                        const std::vector<DiscreteMeasure>& family, std::size_t trials,
                                        std::uint64_t seed, double tol) {
  if (family.size() < 2) throw ValidationError("find_concavity_witness: need at least two family measures");
  const std::vector<double> phi_star = conjugates(phi, chis, family);
  ConcavityWitness best;
  best.excess = -std::numeric_limits<double>::infinity();
  rng::Stream rs(seed, 0x77);
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t i = rs.below(family.size());
    std::size_t j = rs.below(family.size() - 1);
    if (j >= i) ++j;
    const double lambda = 0.1 + 0.8 * rs.uniform();
    const DiscreteMeasure mix = DiscreteMeasure::mixture({{lambda, family[i]}, {1.0 - lambda, family[j]}});
    const double excess = biconjugate(chis, phi_star, mix) - phi(mix);
    ++best.trials;
    if (excess > best.excess) {
      best.excess = excess;
      best.mu1 = family[i];
      best.mu2 = family[j];
      best.lambda = lambda;
    }
    if (best.excess > tol) break;
  }
  best.found = best.excess > tol;
  return best;
}

// ------------------------------------------------------------- dual norm

DualNormResult dual_norm_check(const GridFunction& chi, std::size_t samples, std::uint64_t seed) {
  DualNormResult r;
  r.dual_norm = chi.dual_norm();
  auto objective = [&](const SignedAtoms& nu) { return chi.integrate(nu) + kr_norm(nu); };
  const auto& x = chi.nodes();
  const auto& v = chi.values();
  if (r.dual_norm > 1.0 + 1e-12) {
    r.bounded = false;
    double best_excess = std::abs(v[0]) - 1.0;
    r.direction = SignedAtoms({0.0}, {v[0] > 0.0 ? -1.0 : 1.0});
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double s = (v[i + 1] - v[i]) / (x[i + 1] - x[i]);
      if (std::abs(s) - 1.0 > best_excess) {
        best_excess = std::abs(s) - 1.0;
        const double sg = s > 0.0 ? -1.0 : 1.0;
        const double len = x[i + 1] - x[i];
        r.direction = SignedAtoms({x[i], x[i + 1]}, {-sg / len, sg / len});
      }
    }
    for (double s : {1.0, 10.0, 100.0}) {
      SignedAtoms scaled = r.direction;
      for (double& w : scaled.weights) w *= s;
      r.scales.push_back(s);
      r.values.push_back(objective(scaled));
    }
    r.rate = (r.values[2] - r.values[1]) / (r.scales[2] - r.scales[1]);
    return r;
  }
  rng::Stream rs(seed, 0xD0A1);
  const double span = 2.0 * std::max(x.back(), 1.0);
  r.sample_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    const std::size_t n = 1 + rs.below(5);
    std::vector<double> a(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rs.below(2) == 0 ? x[rs.below(x.size())] : span * rs.uniform();
      w[i] = rs.normal() * std::pow(10.0, 2.0 * rs.uniform());
    }
    r.sample_min = std::min(r.sample_min, objective(SignedAtoms(a, w)));
  }
  r.bounded = r.sample_min >= -1e-9;
  return r;
}

// ------------------------------------------------------------ barycenters

DiscreteMeasure barycenter(const ScalarMixture& eta) {
  if (eta.support.empty() || eta.support.size() != eta.weights.size())
    throw ValidationError("barycenter: need matching nonempty support and weights");
  std::vector<std::pair<double, DiscreteMeasure>> parts;
  for (std::size_t i = 0; i < eta.support.size(); ++i) parts.push_back({eta.weights[i], eta.support[i]});
  return DiscreteMeasure::mixture(parts);
}

MatrixAtomsMeasure barycenter(const MatrixMixture& eta) {
  if (eta.support.empty() || eta.support.size() != eta.weights.size())
    throw ValidationError("barycenter: need matching nonempty support and weights");
  double total = 0.0;
  for (double w : eta.weights) {
    if (!(w >= 0.0)) throw ValidationError("barycenter: weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("barycenter: weights must sum to 1");
  std::vector<Eigen::MatrixXd> atoms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < eta.support.size(); ++i) {
    if (eta.weights[i] == 0.0) continue;
    for (std::size_t k = 0; k < eta.support[i].atoms.size(); ++k) {
      atoms.push_back(eta.support[i].atoms[k]);
      weights.push_back(eta.weights[i] * eta.support[i].weights[k]);
    }
  }
  return MatrixAtomsMeasure(std::move(atoms), std::move(weights));
}

double mixture_distance(const ScalarMixture& a, const ScalarMixture& b) {
  if (a.support.size() != a.weights.size() || b.support.size() != b.weights.size())
    throw ValidationError("mixture_distance: support and weights differ in size");
  return transport_cost(a.weights, b.weights, [&](std::size_t i, std::size_t j) {
    return w1_distance(a.support[i], b.support[j]);
  });
}

// ---------------------------------------------------- Jensen, extreme sets

JensenResult jensen_check(const MatrixFunctional& phi, const MatrixMixture& eta) {
  const MatrixAtomsMeasure bar = barycenter(eta);
  if (!is_monotone_support(bar)) throw PreconditionViolated("barycenter is not monotone");
  for (const auto& nu : eta.support)
    if (!is_monotone_support(nu)) throw PreconditionViolated("monotone barycenter with a non-monotone component");
  JensenResult r;
  for (std::size_t i = 0; i < eta.support.size(); ++i) r.mean_of_phi += eta.weights[i] * phi(eta.support[i]);
  r.phi_of_bar = phi(bar);
  r.holds = r.mean_of_phi <= r.phi_of_bar + 1e-8;
  return r;
}

namespace {

Eigen::MatrixXd random_psd2(rng::Stream& rs, double scale) {
  Eigen::MatrixXd L(2, 2);
  L << rs.normal(), 0.0, rs.normal(), rs.normal();
  return scale * L * L.transpose();
}

MatrixAtomsMeasure random_chain(rng::Stream& rs, std::size_t n) {
  std::vector<Eigen::MatrixXd> atoms;
  Eigen::MatrixXd cur = Eigen::MatrixXd::Zero(2, 2);
  for (std::size_t k = 0; k < n; ++k) {
    cur += random_psd2(rs, 0.3);
    atoms.push_back(cur);
  }
  std::vector<double> w(n);
  double s = 0.0;
  for (double& x : w) s += x = 0.1 + rs.uniform();
  for (double& x : w) x /= s;
  return MatrixAtomsMeasure(atoms, w);
}

MatrixAtomsMeasure random_cloud(rng::Stream& rs, std::size_t n) {
  std::vector<Eigen::MatrixXd> atoms;
  for (std::size_t k = 0; k < n; ++k) atoms.push_back(random_psd2(rs, 0.5));
  std::vector<double> w(n);
  double s = 0.0;
  for (double& x : w) s += x = 0.1 + rs.uniform();
  for (double& x : w) x /= s;
  return MatrixAtomsMeasure(atoms, w);
}

bool comparable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return psd_leq(a, b) || psd_leq(b, a); }

}  // namespace

ExtremeSetReport extreme_set_search(std::size_t trials, std::uint64_t seed) {
  ExtremeSetReport rep;
  rep.trials = trials;
  std::vector<std::size_t> bad(trials, 0), chain_bad(trials, 0), chain_used(trials, 0);
  par::parallel_for(trials, [&](std::size_t k) {
    rng::Stream rs(seed, k);
    // Mixture of 2-3 components, at least one not monotone.
    const std::size_t p = 2 + rs.below(2);
    MatrixMixture eta;
    bool any_nonmonotone = false;
    double s = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      MatrixAtomsMeasure nu = rs.below(2) == 0 ? random_chain(rs, 1 + rs.below(3)) : random_cloud(rs, 2 + rs.below(2));
      any_nonmonotone = any_nonmonotone || !is_monotone_support(nu);
      eta.support.push_back(std::move(nu));
      eta.weights.push_back(0.05 + rs.uniform());
      s += eta.weights.back();
    }
    for (double& w : eta.weights) w /= s;
    if (any_nonmonotone && is_monotone_support(barycenter(eta))) bad[k] = 1;

    // Two chains off a common chain.
    MatrixMixture chains;
    chains.support = {random_chain(rs, 2), random_chain(rs, 2)};
    const double lam = 0.1 + 0.8 * rs.uniform();
    chains.weights = {lam, 1.0 - lam};
    bool incomparable = false;
    for (const auto& a : chains.support[0].atoms)
      for (const auto& b : chains.support[1].atoms) incomparable = incomparable || !comparable(a, b);
    if (incomparable) {
      chain_used[k] = 1;
      if (is_monotone_support(barycenter(chains))) chain_bad[k] = 1;
    }
  });
  for (std::size_t k = 0; k < trials; ++k) {
    rep.counterexamples += bad[k];
    rep.chain_failures += chain_bad[k];
    rep.chain_trials += chain_used[k];
  }
  return rep;
}

// ----------------------------------------------------------- extension

ExtendResult extend_phi(const std::vector<DiscreteMeasure>& family, const std::vector<double>& phi_values,
                        const DiscreteMeasure& mu_prime) {
  if (family.empty() || family.size() != phi_values.size())
    throw ValidationError("extend_phi: need matching nonempty family and values");
  // Union of the family atoms.
  std::map<double, std::size_t> index;
  for (const auto& nu : family)
    for (double a : nu.atoms()) index.emplace(a, 0);
  std::vector<double> atoms;
  for (auto& [a, i] : index) {
    i = atoms.size();
    atoms.push_back(a);
  }
  const std::size_t n = family.size(), K = atoms.size(), L = mu_prime.size();
  const std::size_t nvar = n + K * L;
  auto pi = [&](std::size_t k, std::size_t l) { return n + k * L + l; };

  lp::Problem prob(nvar);
  std::vector<double> c(nvar, 0.0);
  for (std::size_t i = 0; i < n; ++i) c[i] = phi_values[i];
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < L; ++l) c[pi(k, l)] = -std::abs(atoms[k] - mu_prime.atoms()[l]);
  prob.set_objective(c, true);
  {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t i = 0; i < n; ++i) row.push_back({i, 1.0});
    prob.add_sparse_row(row, lp::Sense::eq, 1.0);
  }
  // Row sums of the plan match the barycenter's atom masses.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(K);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < family[i].size(); ++a)
      rows[index.at(family[i].atoms()[a])].push_back({i, -family[i].weights()[a]});
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < L; ++l) rows[k].push_back({pi(k, l), 1.0});
    prob.add_sparse_row(rows[k], lp::Sense::eq, 0.0);
  }
  // Column sums match mu'; the last one is implied.
  for (std::size_t l = 0; l + 1 < L; ++l) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t k = 0; k < K; ++k) row.push_back({pi(k, l), 1.0});
    prob.add_sparse_row(row, lp::Sense::eq, mu_prime.weights()[l]);
  }
  const lp::Solution sol = prob.solve();
  if (sol.status != lp::Status::optimal) throw LpFailure(std::string("extend_phi LP: ") + lp::to_string(sol.status));
  ExtendResult r;
  r.value = sol.objective;
  r.weights.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n));
  return r;
}

// ------------------------------------------------------ empirical measures

std::vector<EmpiricalRow> empirical_convergence(const DiscreteMeasure& mu, const std::vector<std::size_t>& n_list,
                                                std::uint64_t seed, std::size_t repetitions) {
  if (repetitions == 0) throw ValidationError("empirical_convergence: need at least one repetition");
  std::vector<EmpiricalRow> out;
  const auto& atoms = mu.atoms();
  std::vector<double> cdf(mu.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) cdf[i] = acc += mu.weights()[i];
  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    const std::size_t n = n_list[idx];
    if (n == 0) throw ValidationError("empirical_convergence: n must be >= 1");
    std::vector<double> w1(repetitions);
    par::parallel_for(repetitions, [&](std::size_t r) {
      rng::Stream rs(rng::derive(rng::derive(seed, idx), r));
      std::vector<double> counts(atoms.size(), 0.0);
      for (std::size_t s = 0; s < n; ++s) {
        const double u = rs.uniform();
        const std::size_t k = std::min<std::size_t>(
            static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), atoms.size() - 1);
        counts[k] += 1.0;
      }
      for (double& c : counts) c /= static_cast<double>(n);
      std::vector<double> a, w;
      for (std::size_t k = 0; k < atoms.size(); ++k)
        if (counts[k] > 0.0) {
          a.push_back(atoms[k]);
          w.push_back(counts[k]);
        }
      w1[r] = w1_distance(mu, DiscreteMeasure(a, w));
    });
    EmpiricalRow row;
    row.n = n;
    std::vector<double> sorted = w1;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    row.median_w1 = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    for (double v : w1) row.mean_w1 += v / static_cast<double>(m);
    out.push_back(row);
  }
  return out;
}

}  // namespace parisi::fenchel
