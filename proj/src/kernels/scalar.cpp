#include <algorithm>
#include <cmath>
#include <limits>

#include "parisi/kernels/kernels.hpp"

namespace parisi::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double max_scalar(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

double sum_exp_scalar(const double* x, std::size_t n, double shift) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - shift);
  return s;
}

void accumulate_weighted_exp_scalar(double w, double scale, const double* y,
                                    const double* shift, double* acc,
                                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    acc[i] += w * std::exp(scale * y[i] - shift[i]);
}

void exp_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

constexpr KernelTable kScalar{
    Isa::scalar,   dot_scalar,
    axpy_scalar,   max_scalar,
    sum_exp_scalar, accumulate_weighted_exp_scalar,
    exp_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace parisi::kernels
