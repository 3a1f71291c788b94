#pragma once

// Hopf-Lax operator S_t on 1-Lipschitz convex nondecreasing functions, its
// Hopf (conjugate) representation, the gradient-parameterized variant used
// for matrix overlaps, and the finite-dimensional path discretization.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "parisi/measures.hpp"
#include "parisi/models.hpp"

namespace parisi {

/// chi(x) = sum_k d_k (x - x_{k-1})^+ with knots 0 = x_0 < ... < x_m and
/// slopes s_k = d_1 + ... + d_k nondecreasing in [0, 1]. Beyond x_m the last
/// slope continues.
class PLConvexFn {
 public:
  /// The zero function on [0, 1].
  PLConvexFn();
  PLConvexFn(std::vector<double> knots, std::vector<double> slopes);

  static PLConvexFn linear(double slope, double x_end = 1.0);
  /// Slopes from nonnegative increments, sum(increments) <= 1.
  static PLConvexFn from_increments(std::vector<double> knots, const std::vector<double>& increments);
  /// Piecewise-linear interpolant of the given knot values (must be convex,
  /// nondecreasing and 1-Lipschitz with value 0 at 0 up to 1e-12).
  static PLConvexFn from_values(std::vector<double> knots, const std::vector<double>& values);

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t pieces() const { return slopes_.size(); }
  double max_slope() const { return slopes_.back(); }
  /// Slope of the piece containing (x, x+) (the extension slope past x_m).
  double slope_right_of(double x) const;

  double operator()(double x) const;
  double integrate(const DiscreteMeasure& mu) const;

 private:
  std::vector<double> knots_;
  std::vector<double> slopes_;
  std::vector<double> values_;
};

/// Legendre transform chi*(y) = sup_{x >= 0} xy - chi(x) of a PLConvexFn.
/// Finite exactly on (-inf, s_m]; the bound is stored, never an infinity.
class PLConjugate {
 public:
  explicit PLConjugate(const PLConvexFn& chi);

  double domain_max() const { return breaks_.back(); }
  bool in_domain(double y) const { return y <= domain_max(); }
  /// Throws ValidationError outside the domain.
  double operator()(double y) const;
  /// Breakpoints 0 = y_0 < y_1 < ... (the distinct slopes of chi).
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& break_values() const { return values_; }
  /// sup_y xy - chi*(y), equal to chi(x) for x >= 0.
  double biconjugate(double x) const;

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

PLConjugate pl_conjugate(const PLConvexFn& chi);

/// Precomputed penalty data for one (model, t).
class HopfLax {
 public:
  HopfLax(const MixtureModel& model, double t);

  const MixtureModel& model() const { return model_; }
  double t() const { return t_; }
  /// Search window [0, window] for the sup over y.
  double window() const { return window_; }
  /// t xi*(y/t).
  double penalty(double y) const;

 private:
  MixtureModel model_;
  double t_;
  double window_ = 0.0;
};

struct SupResult {
  double value = 0.0;
  double argmax = 0.0;
};

/// S_t chi(x) = sup_{y >= 0} chi(x+y) - t xi*(y/t); t = 0 gives chi(x).
SupResult s_t_sup(const HopfLax& op, const PLConvexFn& chi, double x);
SupResult s_t_sup(const MixtureModel& model, const PLConvexFn& chi, double t, double x);

/// sup_{y in [0, s_m]} xy - chi*(y) + t xi(y).
SupResult s_t_hopf(const MixtureModel& model, const PLConjugate& conj, double t, double x);
SupResult s_t_hopf(const MixtureModel& model, const PLConvexFn& chi, double t, double x);

/// max over directions y in [0,1] of chi(x + t xi'(y)) - t theta(y). With
/// `refine`, golden-section refinement around the best direction.
SupResult tilde_s_t(const std::function<double(double)>& chi, const MixtureModel& model, double t,
                    double x, const std::vector<double>& directions, bool refine = true);
/// Same for a PLConvexFn; the preimages of its knots are added as directions.
SupResult tilde_s_t(const PLConvexFn& chi, const MixtureModel& model, double t, double x,
                    const std::vector<double>& directions);

/// Matrix version: max over Y in the directions (PSD, |Y| <= 1) of
/// chi(X + t grad xi(Y)) - t theta(Y). Returns the value and the index of
/// the maximizing direction.
struct MatrixSupResult {
  double value = 0.0;
  std::size_t index = 0;
};
MatrixSupResult tilde_s_t(const std::function<double(const Eigen::MatrixXd&)>& chi, const MixtureModel& model,
                          double t, const Eigen::MatrixXd& x, const std::vector<Eigen::MatrixXd>& directions);

// --- paths on [0, 1) ---

/// q(u) = a + b u on [u0, u1).
struct PathSegment {
  double u0, u1, a, b;
};

class Path {
 public:
  explicit Path(std::vector<PathSegment> segments);
  static Path step(const std::vector<double>& cuts, const std::vector<double>& values);
  static Path linear(double a, double b);
  static Path from_measure(const DiscreteMeasure& mu);

  const std::vector<PathSegment>& segments() const { return segs_; }
  double operator()(double u) const;

 private:
  std::vector<PathSegment> segs_;
};

/// x_1, ..., x_j; the paired inner product is <x, y>_j = (1/j) sum x_i y_i.
struct FinitePath {
  std::vector<double> x;
  std::size_t j() const { return x.size(); }
  bool nondecreasing() const;
};

/// l_j x: value x_i on [(i-1)/j, i/j).
Path lift(const FinitePath& x);
/// p_j q: cell averages j int_{(i-1)/j}^{i/j} q.
FinitePath project(std::size_t j, const Path& q);
double pairing_l2(const Path& p, const Path& q);
double pairing_j(const FinitePath& x, const FinitePath& y);
double l1_distance(const Path& p, const Path& q);

struct HjFiniteResult {
  double value = 0.0;
  double separable = 0.0;
  double hopf = 0.0;
};

/// v_j(t, x) by (a) (1/j) sum_i S_t chi(x_i) and (b) the j-dimensional
/// Hopf formula; throws SeparabilityViolation if they differ by > 1e-8.
HjFiniteResult hj_finite_dim(const MixtureModel& model, const PLConvexFn& chi, double t, const FinitePath& x);

/// Randomized search for mu <= nu (cone order) with int chi dmu > int chi dnu.
struct OrderWitness {
  bool found = false;
  DiscreteMeasure lower, upper;
  double excess = 0.0;
  std::size_t trials = 0;
};
OrderWitness find_order_violation(const std::function<double(double)>& chi, double x_hi, std::size_t trials,
                                  std::uint64_t seed);

}  // namespace parisi
