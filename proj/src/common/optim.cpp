#include "parisi/common/optim.hpp"

#include <cmath>
#include <limits>

namespace parisi::optim {

ScalarResult golden_max(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_iter) {
  const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
  ScalarResult best{a, f(a)};
  if (b <= a) return best;
  const double fb = f(b);
  if (fb > best.value) best = {b, fb};

  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  if (fc > best.value) best = {c, fc};
  if (fd > best.value) best = {d, fd};
  return best;
}

PatternResult pattern_search_min(const Objective& f, std::vector<double> x0,
                                 const PatternOptions& opt) {
  const std::size_t n = x0.size();
  PatternResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<double> base = std::move(x0);
  double f_base = eval(base);
  double step = opt.initial_step;

  // Coordinate probes around `x`; returns the improved point in place.
  auto explore = [&](std::vector<double>& x, double& fx) {
    for (std::size_t i = 0; i < n && res.evals < opt.max_evals; ++i) {
      const double keep = x[i];
      x[i] = keep + step;
      double ft = eval(x);
      if (ft < fx) {
        fx = ft;
        continue;
      }
      x[i] = keep - step;
      ft = eval(x);
      if (ft < fx) {
        fx = ft;
        continue;
      }
      x[i] = keep;
    }
  };

  while (step >= opt.min_step && res.evals < opt.max_evals) {
    std::vector<double> trial = base;
    double f_trial = f_base;
    explore(trial, f_trial);
    if (f_trial < f_base) {
      // Pattern moves while they keep paying off.
      while (res.evals < opt.max_evals) {
        std::vector<double> jump(n);
        for (std::size_t i = 0; i < n; ++i) jump[i] = 2.0 * trial[i] - base[i];
        base = trial;
        f_base = f_trial;
        double f_jump = eval(jump);
        explore(jump, f_jump);
        if (f_jump < f_base) {
          trial = std::move(jump);
          f_trial = f_jump;
        } else {
          break;
        }
      }
    } else {
      step *= opt.shrink;
    }
  }
  res.converged = step < opt.min_step;
  res.x = std::move(base);
  res.value = f_base;
  return res;
}

}  // namespace parisi::optim
