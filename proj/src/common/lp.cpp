#include "parisi/common/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "parisi/errors.hpp"

namespace parisi::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
    case Status::numerical: return "numerical";
  }
  return "unknown";
}

Problem::Problem(std::size_t n_vars) : n_(n_vars), c_(n_vars, 0.0), free_(n_vars, false) {}

void Problem::set_objective(std::vector<double> c, bool maximize) {
  if (c.size() != n_) throw ValidationError("lp: objective size mismatch");
  c_ = std::move(c);
  maximize_ = maximize;
}

void Problem::set_free(std::size_t var) { free_.at(var) = true; }

void Problem::add_row(std::vector<double> coeffs, Sense sense, double rhs) {
  if (coeffs.size() != n_) throw ValidationError("lp: row size mismatch");
  rows_.push_back({std::move(coeffs), sense, rhs});
}

void Problem::add_sparse_row(const std::vector<std::pair<std::size_t, double>>& coeffs,
                             Sense sense, double rhs) {
  std::vector<double> a(n_, 0.0);
  for (const auto& [j, v] : coeffs) a.at(j) += v;
  rows_.push_back({std::move(a), sense, rhs});
}

namespace {

// Dense tableau: m rows of (ncols + 1) entries, the last entry is the rhs.
struct Tableau {
  std::size_t m = 0, ncols = 0;
  std::vector<double> t;
  std::vector<std::size_t> basis;

  double& at(std::size_t i, std::size_t j) { return t[i * (ncols + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return t[i * (ncols + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, ncols); }

  void pivot(std::size_t r, std::size_t e) {
    const std::size_t w = ncols + 1;
    double* pr = &t[r * w];
    const double inv = 1.0 / pr[e];
    for (std::size_t j = 0; j < w; ++j) pr[j] *= inv;
    pr[e] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      double* pi = &t[i * w];
      const double f = pi[e];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < w; ++j) pi[j] -= f * pr[j];
      pi[e] = 0.0;
    }
    basis[r] = e;
  }

  // Rebuilds the tableau as B^{-1} [A | b] from the original rows to shed
  // accumulated rounding.
  void reinvert(const Eigen::MatrixXd& orig) {
    Eigen::MatrixXd B(m, m);
    for (std::size_t i = 0; i < m; ++i) B.col(i) = orig.col(basis[i]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const Eigen::MatrixXd T = lu.solve(orig);
    if (!T.allFinite()) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j <= ncols; ++j) at(i, j) = T(i, j);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < m; ++k) at(k, basis[i]) = k == i ? 1.0 : 0.0;
      if (rhs(i) < 0.0 && rhs(i) > -1e-9) rhs(i) = 0.0;
    }
  }
};

// Minimizes cost . x over the tableau's current basis. Columns with
// allowed[j] == false never enter.
Status run_phase(Tableau& tab, const Eigen::MatrixXd& orig, const std::vector<double>& cost,
                 const std::vector<bool>& allowed, const Options& opt,
                 std::size_t& iterations) {
  const std::size_t n = tab.ncols;
  std::vector<double> d(n);
  auto recompute = [&] {
    for (std::size_t j = 0; j < n; ++j) d[j] = cost[j];
    for (std::size_t i = 0; i < tab.m; ++i) {
      const double cb = cost[tab.basis[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) d[j] -= cb * tab.at(i, j);
    }
  };
  recompute();
  std::size_t degenerate_streak = 0;
  std::size_t since_refresh = 1;
  while (true) {
    if (iterations >= opt.max_iterations) return Status::iteration_limit;
    const bool bland = degenerate_streak > 50;
    std::size_t enter = n;
    double best = -opt.optimality_tol;
    for (std::size_t j = 0; j < n; ++j) {
      if (!allowed[j]) continue;
      if (d[j] < best) {
        enter = j;
        if (bland) break;
        best = d[j];
      }
    }
    if (enter == n) {
      if (since_refresh == 0) return Status::optimal;
      // Confirm optimality on a freshly inverted tableau.
      tab.reinvert(orig);
      recompute();
      since_refresh = 0;
      continue;
    }

    // Minimum ratio test; near-ties go to the largest pivot (or to the
    // lowest basis index under Bland's rule).
    constexpr double kPivTol = 1e-9;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tab.m; ++i) {
      const double a = tab.at(i, enter);
      if (a > kPivTol) theta = std::min(theta, std::max(tab.rhs(i), 0.0) / a);
    }
    if (!std::isfinite(theta)) {
      if (since_refresh == 0) return Status::unbounded;
      tab.reinvert(orig);
      recompute();
      since_refresh = 0;
      continue;
    }
    const double window = theta + 1e-12 * (1.0 + theta);
    std::size_t leave = tab.m;
    double best_a = 0.0;
    for (std::size_t i = 0; i < tab.m; ++i) {
      const double a = tab.at(i, enter);
      if (a <= kPivTol) continue;
      if (std::max(tab.rhs(i), 0.0) / a > window) continue;
      const bool better = bland ? (leave == tab.m || tab.basis[i] < tab.basis[leave]) : a > best_a;
      if (better) {
        best_a = a;
        leave = i;
      }
    }
    const double best_ratio = std::max(tab.rhs(leave), 0.0) / tab.at(leave, enter);

    // Steps that barely move the objective count as degenerate; a long run
    // of them switches to Bland's rule to break stalling.
    degenerate_streak = -d[enter] * best_ratio < 1e-13 ? degenerate_streak + 1 : 0;
    // Update reduced costs with the normalized pivot row.
    const double de = d[enter];
    tab.pivot(leave, enter);
    for (std::size_t j = 0; j < n; ++j) d[j] -= de * tab.at(leave, j);
    d[enter] = 0.0;
    ++iterations;
    if (++since_refresh == 50) {
      tab.reinvert(orig);
      recompute();
      since_refresh = 0;
    }
  }
}

}  // namespace

Solution Problem::solve(const Options& opt) const {
  // Column layout: original vars (free vars get an extra negative column),
  // then one slack/surplus per inequality, then artificials.
  std::vector<std::size_t> neg_col(n_, SIZE_MAX);
  std::size_t ncols = n_;
  for (std::size_t j = 0; j < n_; ++j)
    if (free_[j]) neg_col[j] = ncols++;
  const std::size_t first_slack = ncols;
  std::size_t n_ineq = 0;
  for (const Row& r : rows_) n_ineq += r.sense != Sense::eq;
  ncols += n_ineq;
  const std::size_t first_art = ncols;

  const std::size_t m = rows_.size();
  // Decide which rows need artificials (after sign normalization).
  std::vector<double> sign(m, 1.0);
  std::vector<Sense> sense(m);
  std::size_t n_art = 0;
  std::vector<double> b(m);
  for (std::size_t i = 0; i < m; ++i) {
    b[i] = rows_[i].rhs;
    if (opt.perturb > 0.0 && rows_[i].sense != Sense::eq) {
      // Deterministic per-row jitter in [1, 2) * perturb * (1 + |rhs|).
      const double u = static_cast<double>((i * 0x9E3779B97F4A7C15ULL) >> 11) * 0x1.0p-53;
      const double delta = opt.perturb * (1.0 + u) * (1.0 + std::abs(b[i]));
      b[i] += rows_[i].sense == Sense::le ? delta : -delta;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    sense[i] = rows_[i].sense;
    if (b[i] < 0) {
      sign[i] = -1.0;
      if (sense[i] == Sense::le) sense[i] = Sense::ge;
      else if (sense[i] == Sense::ge) sense[i] = Sense::le;
    }
    n_art += sense[i] != Sense::le;
  }
  ncols += n_art;

  Tableau tab;
  tab.m = m;
  tab.ncols = ncols;
  tab.t.assign(m * (ncols + 1), 0.0);
  tab.basis.assign(m, 0);

  std::size_t slack = first_slack, art = first_art;
  for (std::size_t i = 0; i < m; ++i) {
    const Row& r = rows_[i];
    for (std::size_t j = 0; j < n_; ++j) {
      const double a = sign[i] * r.a[j];
      tab.at(i, j) = a;
      if (free_[j]) tab.at(i, neg_col[j]) = -a;
    }
    tab.rhs(i) = sign[i] * b[i];
    if (sense[i] == Sense::le) {
      tab.at(i, slack) = 1.0;
      tab.basis[i] = slack++;
    } else {
      if (sense[i] == Sense::ge) tab.at(i, slack++) = -1.0;
      tab.at(i, art) = 1.0;
      tab.basis[i] = art++;
    }
  }

  Eigen::MatrixXd orig(m, ncols + 1);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= ncols; ++j) orig(i, j) = tab.at(i, j);

  Solution sol;
  std::vector<bool> allowed(ncols, true);

  if (n_art > 0) {
    std::vector<double> phase1(ncols, 0.0);
    for (std::size_t j = first_art; j < ncols; ++j) phase1[j] = 1.0;
    Status s = run_phase(tab, orig, phase1, allowed, opt, sol.iterations);
    if (s == Status::iteration_limit) {
      sol.status = s;
      return sol;
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (tab.basis[i] >= first_art) infeas += tab.rhs(i);
    double scale = 1.0;
    for (double v : b) scale = std::max(scale, std::abs(v));
    if (infeas > opt.feasibility_tol * scale) {
      sol.status = Status::infeasible;
      return sol;
    }
    // Drive remaining (zero-level) artificials out where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis[i] < first_art) continue;
      std::size_t best = first_art;
      double best_abs = 1e-9;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (std::abs(tab.at(i, j)) > best_abs) {
          best_abs = std::abs(tab.at(i, j));
          best = j;
        }
      }
      if (best < first_art) tab.pivot(i, best);
    }
    for (std::size_t j = first_art; j < ncols; ++j) allowed[j] = false;
  }

  std::vector<double> cost(ncols, 0.0);
  const double flip = maximize_ ? -1.0 : 1.0;
  for (std::size_t j = 0; j < n_; ++j) {
    cost[j] = flip * c_[j];
    if (free_[j]) cost[neg_col[j]] = -flip * c_[j];
  }
  sol.status = run_phase(tab, orig, cost, allowed, opt, sol.iterations);
  if (sol.status != Status::optimal) return sol;

  std::vector<double> full(ncols, 0.0);
  for (std::size_t i = 0; i < m; ++i) full[tab.basis[i]] = tab.rhs(i);
  if (opt.perturb > 0.0) {
    // Re-solve the basic values with the unperturbed rhs; keep them when the
    // basis stays feasible.
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd rhs(m);
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      B.col(i) = orig.col(tab.basis[i]);
      rhs(i) = sign[i] * rows_[i].rhs;
      scale = std::max(scale, std::abs(rows_[i].rhs));
    }
    const Eigen::VectorXd xb = B.partialPivLu().solve(rhs);
    if (xb.allFinite() && xb.minCoeff() >= -opt.feasibility_tol * scale)
      for (std::size_t i = 0; i < m; ++i) full[tab.basis[i]] = std::max(xb(i), 0.0);
  }
  sol.x.assign(n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    sol.x[j] = full[j];
    if (free_[j]) sol.x[j] -= full[neg_col[j]];
  }
  {
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd cb(m);
    for (std::size_t i = 0; i < m; ++i) {
      B.col(i) = orig.col(tab.basis[i]);
      cb(i) = tab.basis[i] < ncols ? cost[tab.basis[i]] : 0.0;
    }
    const Eigen::VectorXd pi = B.transpose().partialPivLu().solve(cb);
    sol.duals.resize(m);
    for (std::size_t i = 0; i < m; ++i) sol.duals[i] = flip * sign[i] * pi(i);
  }
  // Reject answers that do not satisfy the original rows or whose duals
  // price some column negatively: signs of a badly conditioned basis.
  {
    double scale = 1.0;
    for (const Row& r : rows_) scale = std::max(scale, std::abs(r.rhs));
    const double tol = std::max(1e-7, 10.0 * opt.perturb) * scale;
    for (std::size_t i = 0; i < m && sol.status == Status::optimal; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n_; ++j) lhs += rows_[i].a[j] * sol.x[j];
      const double r = lhs - rows_[i].rhs;
      if ((rows_[i].sense == Sense::le && r > tol) || (rows_[i].sense == Sense::ge && r < -tol) ||
          (rows_[i].sense == Sense::eq && std::abs(r) > tol))
        sol.status = Status::numerical;
    }
    for (std::size_t j = 0; j < n_ && sol.status == Status::optimal; ++j) {
      // Reduced cost in the minimization orientation.
      double rc = flip * c_[j];
      for (std::size_t i = 0; i < m; ++i) rc -= flip * sol.duals[i] * rows_[i].a[j];
      if (rc < -1e-6 || (free_[j] && rc > 1e-6)) sol.status = Status::numerical;
    }
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < n_; ++j) obj += c_[j] * sol.x[j];
  sol.objective = obj;
  return sol;
}

}  // namespace parisi::lp
