#pragma once

// Finite-family checks on measure spaces: concave conjugates and their
// round trip, barycenters of mixtures, Jensen and extreme-set properties of
// monotone measures, the concave extension, empirical measures.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "parisi/hopf.hpp"
#include "parisi/measures.hpp"

namespace parisi::fenchel {

/// Piecewise-linear function on R+ through (nodes, values); nodes start at
/// 0 and increase. Past the last node the last slope continues.
class GridFunction {
 public:
  GridFunction(std::vector<double> nodes, std::vector<double> values);
  static GridFunction from(const PLConvexFn& chi);
  static GridFunction constant(double c);

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double x) const;
  double integrate(const DiscreteMeasure& mu) const;
  double integrate(const SignedAtoms& nu) const;
  double lipschitz() const;
  /// max(|chi(0)|, Lipschitz constant): the norm dual to the KR norm.
  double dual_norm() const;

 private:
  std::vector<double> nodes_;
  std::vector<double> values_;
};

struct AffinePiece {
  GridFunction chi;
  double c = 0.0;
};

class ConcaveFunctional {
 public:
  /// min_l int chi_l dmu + c_l.
  static ConcaveFunctional min_of_affine(std::vector<AffinePiece> pieces);
  static ConcaveFunctional oracle(std::function<double(const DiscreteMeasure&)> f, double lipschitz);

  double operator()(const DiscreteMeasure& mu) const;
  bool is_min_of_affine() const { return !pieces_.empty(); }
  const std::vector<AffinePiece>& pieces() const { return pieces_; }
  double lipschitz() const { return lipschitz_; }

 private:
  std::vector<AffinePiece> pieces_;
  std::function<double(const DiscreteMeasure&)> oracle_;
  double lipschitz_ = 0.0;
};

/// phi_*(chi) = min over the family of int chi dmu - phi(mu).
double concave_conjugate(const std::function<double(const DiscreteMeasure&)>& phi, const GridFunction& chi,
                         const std::vector<DiscreteMeasure>& family);

struct FmRow {
  DiscreteMeasure mu;
  double phi = 0.0;
  double phi_star_star = 0.0;
};

struct FmReport {
  std::vector<FmRow> rows;
  /// max |phi** - phi| over the test measures.
  double max_abs_diff = 0.0;
  /// min phi** - phi; >= 0 when the test measures are in the family.
  double min_excess = 0.0;
  bool family_too_coarse = false;
};

/// phi** on the test measures with phi_* over `family` (the test measures
/// are added to it) and the outer minimum over `chis`.
FmReport fm_roundtrip(const std::function<double(const DiscreteMeasure&)>& phi, const std::vector<GridFunction>& chis,
                      const std::vector<DiscreteMeasure>& mus, std::vector<DiscreteMeasure> family,
                      double tolerance = 1e-6);

struct ConcavityWitness {
  bool found = false;
  DiscreteMeasure mu1, mu2;
  double lambda = 0.5;
  /// phi**(mix) - phi(mix).
  double excess = 0.0;
  std::size_t trials = 0;
};

/// Random mixtures of family pairs where phi** exceeds phi by more than tol.
ConcavityWitness find_concavity_witness(const std::function<double(const DiscreteMeasure&)>& phi,
                                        const std::vector<GridFunction>& chis,
                                        const std::vector<DiscreteMeasure>& family, std::size_t trials,
                                        std::uint64_t seed, double tol = 1e-6);

struct DualNormResult {
  double dual_norm = 0.0;
  bool bounded = true;
  /// Direction along which int chi dnu + |nu|_KR decreases linearly.
  SignedAtoms direction;
  std::vector<double> scales;
  std::vector<double> values;
  /// Slope of the objective in the scale, negative when unbounded.
  double rate = 0.0;
  /// Smallest objective over the random sample (bounded case).
  double sample_min = 0.0;
};

DualNormResult dual_norm_check(const GridFunction& chi, std::size_t samples = 1000, std::uint64_t seed = 1);

template <class Measure>
struct MixtureWeights {
  std::vector<Measure> support;
  std::vector<double> weights;
};

using ScalarMixture = MixtureWeights<DiscreteMeasure>;
using MatrixMixture = MixtureWeights<MatrixAtomsMeasure>;

DiscreteMeasure barycenter(const ScalarMixture& eta);
MatrixAtomsMeasure barycenter(const MatrixMixture& eta);

/// Transport distance between mixtures with W1 ground cost.
double mixture_distance(const ScalarMixture& a, const ScalarMixture& b);

using MatrixFunctional = std::function<double(const MatrixAtomsMeasure&)>;

struct JensenResult {
  bool holds = false;
  double mean_of_phi = 0.0;
  double phi_of_bar = 0.0;
};

/// sum_i w_i phi(nu_i) <= phi(Bar(eta)) + 1e-8. Throws PreconditionViolated
/// when the barycenter (and so some nu_i) is not monotone.
JensenResult jensen_check(const MatrixFunctional& phi, const MatrixMixture& eta);

struct ExtremeSetReport {
  std::size_t trials = 0;
  /// Mixtures with some non-monotone nu_i but a monotone barycenter.
  std::size_t counterexamples = 0;
  /// Chain mixtures off a common chain whose barycenter came out monotone.
  std::size_t chain_failures = 0;
  std::size_t chain_trials = 0;
};

/// Random D = 2 mixtures checking the extreme-set property of monotone
/// measures.
ExtremeSetReport extreme_set_search(std::size_t trials, std::uint64_t seed);

struct ExtendResult {
  double value = 0.0;
  std::vector<double> weights;
  /// The family restriction makes the value a lower bound.
  bool lower_bound = true;
};

/// sup over eta on the family of int phi deta - W1(Bar(eta), mu'), as one LP
/// in (eta, transport plan).
ExtendResult extend_phi(const std::vector<DiscreteMeasure>& family, const std::vector<double>& phi_values,
                        const DiscreteMeasure& mu_prime);

struct EmpiricalRow {
  std::size_t n = 0;
  double median_w1 = 0.0;
  double mean_w1 = 0.0;
};

/// W1 between mu and the empirical measure of n i.i.d. draws, over
/// `repetitions` draws per n.
std::vector<EmpiricalRow> empirical_convergence(const DiscreteMeasure& mu, const std::vector<std::size_t>& n_list,
                                                std::uint64_t seed, std::size_t repetitions = 50);

}  // namespace parisi::fenchel
