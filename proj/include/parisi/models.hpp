#pragma once

// Covariance functions xi(r) = sum_p a_p r^p, their conjugates and the
// single-spin reference distribution.

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace parisi {

struct PowerTerm {
  int degree = 0;
  double coeff = 0.0;
};

struct SpinDistribution {
  enum class Kind { ising, atoms };
  Kind kind = Kind::ising;
  std::size_t dim = 1;
  // One row per atom (dim entries each) and the matching probabilities.
  std::vector<std::vector<double>> values;
  std::vector<double> weights;

  static SpinDistribution ising();
  static SpinDistribution atoms(std::vector<std::vector<double>> values,
                                std::vector<double> weights);
  /// Scalar atoms for D = 1, with the Ising law as {-1, +1}.
  static SpinDistribution scalar_atoms(const std::vector<double>& values,
                                       std::vector<double> weights);

  /// Largest squared norm |sigma|^2 over the support.
  double max_sq_norm() const;
};

class MixtureModel {
 public:
  MixtureModel(std::vector<PowerTerm> terms, std::size_t dim = 1,
               SpinDistribution spins = SpinDistribution::ising());

  /// xi(r) = r^2 with Ising spins.
  static MixtureModel sk();

  const std::vector<PowerTerm>& terms() const { return terms_; }
  std::size_t dim() const { return dim_; }
  const SpinDistribution& spins() const { return spins_; }
  double coeff(int degree) const;
  int max_degree() const;
  /// True when some a_p > 0 with p >= 2, i.e. xi' is strictly increasing on R+.
  bool superlinear() const;

  double xi(double r) const;
  double xi_prime(double r) const;
  double xi_second(double r) const;
  /// theta(x) = x xi'(x) - xi(x) = sum_p (p-1) a_p x^p.
  double theta(double x) const;

  // D > 1: entrywise powers, xi(R) = sum_p a_p sum_{d,d'} R_{dd'}^p.
  double xi(const Eigen::MatrixXd& r) const;
  Eigen::MatrixXd xi_grad(const Eigen::MatrixXd& r) const;
  double theta(const Eigen::MatrixXd& x) const;

  /// c^2 = max |sigma|^2 under P_1.
  double c2() const { return spins_.max_sq_norm(); }
  /// Right end of the overlap window t xi'(c^2) where optimal Parisi measures
  /// live in the (psi, t xi*(x/t)) form (D = 1).
  double x_max(double t) const;

 private:
  std::vector<PowerTerm> terms_;
  std::size_t dim_;
  SpinDistribution spins_;
};

struct ConjugateResult {
  double value = 0.0;
  double argmax = 0.0;
};

/// t xi*(y/t) = sup_{b >= 0} y b - t xi(b). Throws DivergentConjugate when
/// xi has no superlinear term and y/t exceeds a_1.
ConjugateResult xi_star(const MixtureModel& model, double y, double t);

/// Restricted conjugate sup_{b in [0,1]} y b - xi(b).
ConjugateResult xi_star_restricted(const MixtureModel& model, double y);

/// xi_alpha = xi + alpha |x|^2 (a_2 += alpha).
MixtureModel perturb_alpha(const MixtureModel& model, double alpha);

}  // namespace parisi
