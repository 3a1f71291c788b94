#pragma once

// Derivative-free optimizers: golden-section search on an interval and a
// Hooke-Jeeves pattern search on R^n.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace parisi::optim {

struct ScalarResult {
  double x = 0.0;
  double value = 0.0;
};

/// Maximizes f on [a, b] assuming unimodality. The endpoints are also
/// evaluated so a monotone f returns its boundary maximum.
ScalarResult golden_max(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int max_iter = 200);

struct PatternOptions {
  double initial_step = 0.5;
  double min_step = 1e-7;
  double shrink = 0.5;
  std::size_t max_evals = 20000;
};

struct PatternResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes f by Hooke-Jeeves exploratory + pattern moves.
PatternResult pattern_search_min(const Objective& f, std::vector<double> x0,
                                 const PatternOptions& options = {});

}  // namespace parisi::optim
