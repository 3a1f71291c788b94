#pragma once

// Lower bounds from the Parisi supremum, upper bounds from the infimum over
// convex 1-Lipschitz chi, and the solver that brackets the limit.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "parisi/hopf.hpp"
#include "parisi/measures.hpp"
#include "parisi/models.hpp"
#include "parisi/parisi.hpp"

namespace parisi {

/// t * sum_k w_k xi*(q_k / t).
double parisi_penalty(const MixtureModel& model, double t, const DiscreteMeasure& nu);

/// psi(nu) - t int xi*(x/t) dnu(x). Requires t > 0.
double eval_lower(const MixtureModel& model, double t, const DiscreteMeasure& nu, const PsiOptions& options = {});
double eval_lower(const MixtureModel& model, double t, const FamilyMember& nu);

struct UpperValue {
  double value = 0.0;
  double s_t_at_zero = 0.0;
  double psi_star = 0.0;
  DiscreteMeasure psi_star_argmin;
  double hopf_lax_argmax = 0.0;
};

/// S_t chi(0) - psi_hat_*(chi) with psi_hat_* the family minimum. The
/// family restriction can only raise psi_*, so the value is family-relative:
/// it dominates eval_lower(nu) for every nu in the family.
UpperValue eval_upper(const MixtureModel& model, double t, const PLConvexFn& chi,
                      const std::vector<FamilyMember>& family);
UpperValue eval_upper(const HopfLax& op, const PLConvexFn& chi, const std::vector<FamilyMember>& family);

struct SolverOptions {
  /// Levels K of the sup-side measures (K + 1 atoms).
  std::size_t levels = 4;
  /// Pieces m of the inf-side chi.
  std::size_t knots = 64;
  std::size_t restarts = 8;
  std::uint64_t seed = 7;
  std::size_t max_evals_per_start = 3000;
  std::size_t max_cut_rounds = 40;
  double cut_tol = 1e-9;
  /// Points of the q-lattice added to the psi_* family.
  std::size_t lattice_points = 6;
  PsiOptions psi;
  /// Optional warm start for the sup side.
  std::vector<DiscreteMeasure> warm_start;
};

struct TraceRow {
  std::string phase;
  std::size_t iteration = 0;
  double value = 0.0;
};

struct SolverReport {
  double t = 0.0;
  double lower = 0.0;
  DiscreteMeasure lower_argmax;
  double upper = 0.0;
  PLConvexFn upper_argmin;
  double gap = 0.0;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  std::size_t family_size = 0;
  std::uint64_t seed = 0;
  double cut_tol = 0.0;
  /// The upper value is family-relative (psi_* restricted to a family).
  bool psi_star_family_bound = true;
  bool nonconvergence = false;
  std::vector<TraceRow> trace;
};

SolverReport solve_gap(const MixtureModel& model, double t, const SolverOptions& options = {});

/// Maximizes eval_lower over measures with K + 1 atoms. Every evaluated
/// measure is appended to `visited` when it is non-null.
struct LowerResult {
  double value = 0.0;
  DiscreteMeasure argmax;
  std::size_t evals = 0;
};
LowerResult maximize_lower(const MixtureModel& model, double t, const SolverOptions& options,
                           std::vector<FamilyMember>* visited, std::vector<TraceRow>* trace);

/// Minimizes  A(chi) - psi_hat_*(chi)  over chi = sum_k d_k (x - x_{k-1})^+
/// on the given knots, where A(chi) = S_t chi(0) when t > 0 and
/// int chi d(base) when t = 0. Cutting planes on an LP in the increments d;
/// exact for the family part. With final_slope_one, sum_k d_k = 1.
struct UpperProblem {
  double t = 0.0;
  DiscreteMeasure base;
  std::vector<double> knots;
  bool final_slope_one = true;
  std::size_t max_rounds = 40;
  double tol = 1e-9;
  std::size_t initial_family_rows = 40;
};
struct UpperResult {
  double value = 0.0;
  double lp_bound = 0.0;
  PLConvexFn chi;
  std::size_t rounds = 0;
  bool converged = false;
};
UpperResult minimize_upper(const MixtureModel& model, const UpperProblem& problem,
                           const std::vector<FamilyMember>& family);

/// The K = 3-style q-lattice: subsets of at most 4 of `points` equally
/// spaced atoms on [0, x_hi] with equal weights, plus a finer Dirac grid.
std::vector<DiscreteMeasure> lattice_family(double x_hi, std::size_t points);

// ------------------------------------------------------------- D >= 1 plumbing

/// Measure on the direction set: y_i = directions[indices[i]] with weights.
/// Its pushforward x = t grad xi(y) lives in t grad xi(B(0,1) cap S+).
struct DirectionMeasure {
  std::vector<std::size_t> indices;
  std::vector<double> weights;
};

using MatrixPsiOracle = std::function<double(const MatrixAtomsMeasure&)>;
using MatrixChi = std::function<double(const Eigen::MatrixXd&)>;

struct VectorUpperResult {
  double upper = 0.0;
  double s_tilde_at_zero = 0.0;
  double psi_star = 0.0;
  /// max over the family of psi(mu) - t int theta(y) dmu(y).
  double best_lower = 0.0;
  bool bracket_holds = true;
};

/// S~_t chi(0) - psi_hat^xi_*(chi) over a caller family of direction
/// measures, with the bracket against the sup side on the same family.
VectorUpperResult eval_upper_vector(const MatrixPsiOracle& psi_oracle, const MixtureModel& model, double t,
                                    const MatrixChi& chi, const std::vector<Eigen::MatrixXd>& directions,
                                    const std::vector<DirectionMeasure>& family);

struct AlphaRow {
  double alpha = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double mid = 0.0;
};

struct AlphaScan {
  std::vector<AlphaRow> rows;
  /// |mid_i - mid_{i+1}| / |alpha_i - alpha_{i+1}|.
  std::vector<double> slopes;
  double bound = 0.0;
  bool within_bound = true;
};

/// Brackets under xi_alpha for each alpha; slope bound C = 3t + 4, with the
/// bracket widths as margin.
AlphaScan alpha_continuity_scan(const MixtureModel& model, double t, const std::vector<double>& alphas,
                                const SolverOptions& options = {});

}  // namespace parisi
