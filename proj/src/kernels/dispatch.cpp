#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "parisi/kernels/kernels.hpp"

namespace parisi::kernels {

#if defined(PARISI_HAVE_AVX2_TU)
const KernelTable& avx2_table_unchecked();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(PARISI_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  const KernelTable* simd = avx2_table();
  const char* env = std::getenv("PARISI_LAB_SIMD");
  std::string choice = env ? env : "auto";
  if (choice == "scalar" || simd == nullptr) return scalar_table();
  return *simd;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_table() {
#if defined(PARISI_HAVE_AVX2_TU)
  static const bool ok = cpu_has_avx2();
  return ok ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

std::span<const KernelTable* const> available() {
  static const std::vector<const KernelTable*> tables = [] {
    std::vector<const KernelTable*> t{&scalar_table()};
    if (const KernelTable* simd = avx2_table()) t.push_back(simd);
    return t;
  }();
  return tables;
}

double logsumexp(const KernelTable& table, std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = table.max(x.data(), x.size());
  if (!std::isfinite(m)) return m;
  return m + std::log(table.sum_exp(x.data(), x.size(), m));
}

double logsumexp(std::span<const double> x) { return logsumexp(active(), x); }

}  // namespace parisi::kernels
