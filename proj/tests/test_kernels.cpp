#include <cmath>
#include <vector>

#include "doctest.h"
#include "parisi/common/rng.hpp"
#include "parisi/kernels/kernels.hpp"

using namespace parisi;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t stream, double scale) {
  rng::Stream rs(17, stream);
  std::vector<double> x(n);
  for (double& v : x) v = scale * rs.normal();
  return x;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("active table is one of the available ones") {
    bool found = false;
    for (const auto* t : kernels::available()) found = found || t == &kernels::active();
    CHECK(found);
    CHECK(kernels::available().front() == &kernels::scalar_table());
    CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
  }

  TEST_CASE("every variant matches the scalar reference") {
    const auto& ref = kernels::scalar_table();
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 33u, 64u, 257u, 1000u}) {
      const auto x = normals(n, 1, 3.0), y = normals(n, 2, 3.0), sh = normals(n, 3, 1.0);
      for (const auto* tab : kernels::available()) {
        CAPTURE(n);
        CAPTURE(kernels::isa_name(tab->isa));
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) scale += std::abs(x[i] * y[i]);
        CHECK(std::abs(tab->dot(x.data(), y.data(), n) - ref.dot(x.data(), y.data(), n)) <= 1e-14 * scale);

        std::vector<double> a = y, b = y;
        tab->axpy(0.7, x.data(), a.data(), n);
        ref.axpy(0.7, x.data(), b.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-15 * (std::abs(0.7 * x[i]) + std::abs(y[i])));

        CHECK(tab->max(x.data(), n) == ref.max(x.data(), n));

        const double s1 = tab->sum_exp(x.data(), n, 2.0), s2 = ref.sum_exp(x.data(), n, 2.0);
        CHECK(std::abs(s1 - s2) <= 1e-13 * s2);

        std::vector<double> e1(n), e2(n);
        tab->exp(x.data(), e1.data(), n);
        ref.exp(x.data(), e2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(e1[i] - e2[i]) <= 1e-14 * e2[i]);

        std::vector<double> acc1(n, 0.5), acc2(n, 0.5);
        tab->accumulate_weighted_exp(0.3, 0.8, y.data(), sh.data(), acc1.data(), n);
        ref.accumulate_weighted_exp(0.3, 0.8, y.data(), sh.data(), acc2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(acc1[i] - acc2[i]) <= 1e-14 * acc2[i]);

        CHECK(std::abs(kernels::logsumexp(*tab, x) - kernels::logsumexp(ref, x)) <= 1e-13);
      }
    }
  }

  TEST_CASE("exp kernel against std::exp over a wide range") {
    std::vector<double> x;
    for (int i = -7000; i <= 7000; ++i) x.push_back(i * 0.1);
    for (const auto* tab : kernels::available()) {
      std::vector<double> out(x.size());
      tab->exp(x.data(), out.data(), x.size());
      double worst = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(out[i] / std::exp(x[i]) - 1.0));
      CAPTURE(kernels::isa_name(tab->isa));
      CHECK(worst <= 1e-14);
    }
  }

  TEST_CASE("logsumexp edge cases") {
    CHECK(std::isinf(kernels::logsumexp(std::span<const double>{})));
    const std::vector<double> big{1000.0, 1000.0};
    CHECK(kernels::logsumexp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  }
}
