#pragma once

// Finite-N free energies of Ising mixed p-spin models by exact enumeration of
// the 2^N configurations, averaged over Gaussian disorder.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "parisi/models.hpp"

namespace parisi::mc {

inline constexpr std::size_t kMaxSpins = 22;

/// Ising Hamiltonian reduced with sigma_i^2 = 1:
/// constant + sum_i field_i s_i + sum_{i<j} J_ij s_i s_j + sum_S c_S prod_{i in S} s_i.
struct Couplings {
  std::size_t N = 0;
  double constant = 0.0;
  std::vector<double> field;
  /// Symmetric N x N, zero diagonal, row-major.
  std::vector<double> pair;
  /// Monomials of order >= 3 as bit masks over the spins.
  std::vector<std::pair<std::uint32_t, double>> higher;

  explicit Couplings(std::size_t n = 0);
  void add_pair(std::size_t i, std::size_t j, double v);
  void scale(double s);
  /// Value at a configuration given as a bit mask (bit i set means s_i = -1).
  double evaluate(std::uint32_t negatives) const;
};

/// H_N for one disorder sample: degree-p Gaussians keyed by (seed, sample,
/// p, index tuple), normalized so that E H(s) H(s') = N xi(s.s'/N).
Couplings hamiltonian(const MixtureModel& model, std::size_t N, std::uint64_t seed, std::uint64_t sample);

/// (1/sqrt N) sum_{i,j} J_ij s_i s_j with J from a stream independent of H_N.
Couplings potts_hamiltonian(std::size_t N, std::uint64_t seed, std::uint64_t sample);

/// log sum_s exp(X(s)) over all 2^N configurations.
double log_partition(const Couplings& x);

struct FreeEnergyEstimate {
  double t = 0.0;
  std::size_t N = 0;
  std::size_t n_samples = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  /// "plain" or "enriched".
  std::string mode = "plain";
  double q = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

/// -(1/N) E log int exp(sqrt(2t) H_N(s) - t N xi(1)) dP_N(s).
FreeEnergyEstimate sample_free_energy(const MixtureModel& model, double t, std::size_t N, std::size_t n_samples,
                                      std::uint64_t seed);

/// Adds sqrt(2q) z.s - q s.s to the exponent with z ~ N(0, I_N) drawn per
/// sample from its own stream. With exact_z_average (t = 0 only) the z
/// average is done by quadrature and the estimate carries no noise.
FreeEnergyEstimate enriched_free_energy(const MixtureModel& model, double t, double q, std::size_t N,
                                        std::size_t n_samples, std::uint64_t seed, bool exact_z_average = false);

struct CovarianceRow {
  double overlap = 0.0;
  double target = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  bool within = false;
};

/// Empirical E[H(s) H(s')] against N xi(s.s'/N); probes are +-1 vectors.
std::vector<CovarianceRow> covariance_check(const MixtureModel& model, std::size_t N, std::size_t n_samples,
                                            std::uint64_t seed,
                                            const std::vector<std::pair<std::vector<int>, std::vector<int>>>& probes,
                                            double bands = 4.0);

struct PottsRow {
  double alpha = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct PottsStep {
  double alpha0 = 0.0, alpha1 = 0.0;
  double diff = 0.0;
  double diff_stderr = 0.0;
  double slope = 0.0;
  bool within = false;
};

struct PottsReport {
  double bound = 0.0;
  std::vector<PottsRow> rows;
  std::vector<PottsStep> steps;
  bool within_bound = true;
  /// Values nondecreasing in alpha within 4 paired stderr.
  bool monotone = true;
};

/// F^alpha_N(t) with H + sqrt(alpha) H^Potts and common disorder across
/// alphas; steps use paired differences. The bound is C = t.
PottsReport potts_perturbation_check(const MixtureModel& model, double t, std::size_t N,
                                     const std::vector<double>& alphas, std::size_t n_samples, std::uint64_t seed);

}  // namespace parisi::mc
