#pragma once

// Data-parallel inner loops shared by the cascade recursion, the exact
// enumeration and the cascade sampler.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is picked once at startup from the CPU
// features (override with PARISI_LAB_SIMD=scalar|avx2|auto). Variants agree
// with the reference to a few ulp; they are not bit-identical because the
// reductions are blocked differently.

#include <cstddef>
#include <span>
#include <string_view>

namespace parisi::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// One function pointer per kernel. Pointers never change after selection.
struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  double (*max)(const double* x, std::size_t n);
  // sum_i exp(x[i] - shift)
  double (*sum_exp)(const double* x, std::size_t n, double shift);
  // acc[i] += w * exp(scale * y[i] - shift[i])
  void (*accumulate_weighted_exp)(double w, double scale, const double* y,
                                  const double* shift, double* acc,
                                  std::size_t n);
  // out[i] = exp(x[i])
  void (*exp)(const double* x, double* out, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// The table selected for this process.
const KernelTable& active();

/// Tables runnable on this machine, scalar first.
std::span<const KernelTable* const> available();

// Convenience wrappers over active().

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

/// log(sum_i exp(x[i])); -inf for an empty span.
double logsumexp(std::span<const double> x);
double logsumexp(const KernelTable& table, std::span<const double> x);

}  // namespace parisi::kernels
