#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace parisi {

/// Finitely supported probability measure on R+, kept canonical: atoms
/// strictly increasing, weights positive and summing to 1.
class DiscreteMeasure {
 public:
  static constexpr double kMergeTol = 1e-12;

  /// delta_0.
  DiscreteMeasure();
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights);

  static DiscreteMeasure dirac(double q);
  /// Measure of the step path with value q[k] on [cuts[k], cuts[k+1]);
  /// cuts has q.size() + 1 entries from 0 to 1.
  static DiscreteMeasure from_path(const std::vector<double>& cuts, const std::vector<double>& q);
  /// sum_i c_i mu_i for a probability vector c.
  static DiscreteMeasure mixture(const std::vector<std::pair<double, DiscreteMeasure>>& parts);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }

  /// 0 = zeta_0 < zeta_1 < ... < zeta_{K+1} = 1.
  std::vector<double> cuts() const;
  /// Right-continuous quantile path; quantile(1) is the largest atom.
  double quantile(double u) const;
  double integrate(const std::function<double(double)>& f) const;
  double mean() const;
  double max_atom() const { return atoms_.back(); }

  bool operator==(const DiscreteMeasure&) const = default;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

/// Probability measure with finitely many PSD matrix atoms.
struct MatrixAtomsMeasure {
  std::vector<Eigen::MatrixXd> atoms;
  std::vector<double> weights;

  MatrixAtomsMeasure() = default;
  MatrixAtomsMeasure(std::vector<Eigen::MatrixXd> atoms, std::vector<double> weights);

  static MatrixAtomsMeasure from_scalar(const DiscreteMeasure& mu);
  std::size_t dim() const { return atoms.empty() ? 0 : static_cast<std::size_t>(atoms.front().rows()); }
  double integrate(const std::function<double(const Eigen::MatrixXd&)>& f) const;
};

/// Finitely supported signed measure on R+ with reference point 0.
struct SignedAtoms {
  std::vector<double> atoms;
  std::vector<double> weights;

  SignedAtoms() = default;
  SignedAtoms(std::vector<double> atoms, std::vector<double> weights);
  static SignedAtoms difference(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
  double total_mass() const;
};

/// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const Eigen::MatrixXd& a);
bool is_psd(const Eigen::MatrixXd& a, double tol = 1e-10);
/// x <= y in the PSD order (y - x PSD) within tolerance.
bool psd_leq(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double tol = 1e-10);

double w1_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
/// Optimal transport with Frobenius ground cost, by LP.
double w1_distance(const MatrixAtomsMeasure& mu, const MatrixAtomsMeasure& nu);

/// Kantorovich-Rubinstein norm by LP (adjacent Lipschitz constraints, node 0).
double kr_norm(const SignedAtoms& nu);
/// |nu(R)| + int_0^inf |nu((x, inf))| dx.
double kr_norm_closed_form(const SignedAtoms& nu);
/// KR norm of a signed measure on matrices: all-pairs Lipschitz LP, node 0.
double kr_norm(const std::vector<Eigen::MatrixXd>& atoms, const std::vector<double>& weights);

/// Cone order on quantile paths: int_t^1 (q_nu - q_mu) >= -1e-12 for all t.
bool measure_leq(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
bool is_monotone_support(const MatrixAtomsMeasure& mu);

/// min sum_ij cost(i,j) pi_ij over couplings of a and b (both summing to
/// the same total). Returns the optimal value.
double transport_cost(const std::vector<double>& a, const std::vector<double>& b,
                      const std::function<double(std::size_t, std::size_t)>& cost);

}  // namespace parisi
