#pragma once

// Small dense linear programs: transport problems between finitely supported
// measures, Kantorovich-Rubinstein norms and the cutting-plane master
// problems of the duality solver. Two-phase primal simplex on a dense
// tableau; intended for at most a few thousand rows and columns.

#include <cstddef>
#include <utility>
#include <vector>

namespace parisi::lp {

enum class Sense { le, ge, eq };
enum class Status { optimal, infeasible, unbounded, iteration_limit, numerical };

const char* to_string(Status s);

struct Solution {
  Status status = Status::iteration_limit;
  double objective = 0.0;
  std::vector<double> x;
  /// Sensitivity of the objective to each row's rhs.
  std::vector<double> duals;
  std::size_t iterations = 0;
};

struct Options {
  std::size_t max_iterations = 200000;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  /// Loosens each inequality by a tiny pseudo-random amount (relative size
  /// about this value) to break degeneracy. 0 disables.
  double perturb = 0.0;
};

class Problem {
 public:
  explicit Problem(std::size_t n_vars);

  std::size_t num_vars() const { return n_; }
  std::size_t num_rows() const { return rows_.size(); }

  /// Objective coefficients; minimize unless `maximize`.
  void set_objective(std::vector<double> c, bool maximize);
  /// Variables are nonnegative unless marked free.
  void set_free(std::size_t var);

  void add_row(std::vector<double> coeffs, Sense sense, double rhs);
  void add_sparse_row(const std::vector<std::pair<std::size_t, double>>& coeffs,
                      Sense sense, double rhs);

  Solution solve(const Options& options = {}) const;

 private:
  struct Row {
    std::vector<double> a;
    Sense sense;
    double rhs;
  };
  std::size_t n_;
  std::vector<double> c_;
  bool maximize_ = false;
  std::vector<bool> free_;
  std::vector<Row> rows_;
};

}  // namespace parisi::lp
