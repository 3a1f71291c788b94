#pragma once

// The cascade functional psi(mu) for finitely supported mu (D = 1): a
// grid recursion, a truncated Poisson-Dirichlet cascade sampler as an
// independent check, and the family-restricted concave dual psi_*.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "parisi/hopf.hpp"
#include "parisi/measures.hpp"
#include "parisi/models.hpp"

namespace parisi {

struct PsiOptions {
  /// Gauss-Hermite order for levels whose field increment is below 1.5 grid
  /// steps (where a trapezoid rule on the grid is not accurate).
  int quad_order = 60;
  /// Spacing of the shared field grid.
  double grid_step = 0.02;
  /// Gaussian nodes are kept within this many standard deviations.
  double span_sd = 10.0;
};

struct PsiValue {
  enum class Method { recursion, cascade_mc };
  double value = 0.0;
  Method method = Method::recursion;
  double stderr_ = 0.0;
  int quad_order = 0;
  std::size_t replicates = 0;
  bool truncation_warning = false;
  double truncated_mass_bound = 0.0;
};

const char* to_string(PsiValue::Method m);

PsiValue psi(const MixtureModel& model, const DiscreteMeasure& mu, const PsiOptions& options = {});

/// Recursion on a raw path: q_0 <= ... <= q_K and exponents zeta_1..zeta_K
/// (zeta_k = mu([0, q_{k-1}])). No canonicalization, so repeated atoms are
/// allowed; a level with zero increment is the identity.
PsiValue psi_path(const MixtureModel& model, const std::vector<double>& q, const std::vector<double>& zeta,
                  const PsiOptions& options = {});

struct CascadeSpec {
  std::size_t points_per_node = 2000;
  std::uint64_t seed = 1;
};

/// Monte-Carlo average over truncated cascades (at most two levels).
PsiValue psi_cascade_mc(const MixtureModel& model, const DiscreteMeasure& mu, const CascadeSpec& spec,
                        std::size_t n_rep);

/// Normalized leaf weights of one sampled cascade with exponents zeta
/// (at most two levels), M points per node.
std::vector<double> sample_cascade_weights(const std::vector<double>& zeta, std::size_t M, std::uint64_t seed);

/// A measure with its cached psi value.
struct FamilyMember {
  DiscreteMeasure mu;
  double psi = 0.0;
};

std::vector<FamilyMember> make_family(const MixtureModel& model, const std::vector<DiscreteMeasure>& measures,
                                      const PsiOptions& options = {});

/// min over candidates of int chi dmu - psi(mu). Always an upper bound on
/// the true psi_*(chi).
struct PsiStarResult {
  double value = 0.0;
  DiscreteMeasure argmin;
  bool upper_bound = true;
  std::size_t evaluated = 0;
};

PsiStarResult psi_star(const std::function<double(double)>& chi, const std::vector<FamilyMember>& family);
PsiStarResult psi_star(const PLConvexFn& chi, const std::vector<FamilyMember>& family);

struct PsiStarSearch {
  std::size_t atoms = 3;
  double q_max = 1.0;
  std::size_t grid = 41;
  std::uint64_t seed = 1;
  std::size_t max_evals = 3000;
};

/// Search mode: a Dirac scan on [0, q_max] followed by a pattern search over
/// measures with `atoms` atoms. Throws DivergenceDetected when the Dirac
/// objective keeps decreasing at q_max, 5 q_max, 10 q_max.
PsiStarResult psi_star(const MixtureModel& model, const std::function<double(double)>& chi,
                       const PsiStarSearch& search, const PsiOptions& options = {});

}  // namespace parisi
