#include <cmath>

#include "doctest.h"
#include "parisi/common/lp.hpp"
#include "parisi/common/rng.hpp"

using namespace parisi;

TEST_SUITE("lp") {
  TEST_CASE("textbook maximization with duals") {
    // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18.
    lp::Problem p(2);
    p.set_objective({3.0, 5.0}, true);
    p.add_row({1.0, 0.0}, lp::Sense::le, 4.0);
    p.add_row({0.0, 2.0}, lp::Sense::le, 12.0);
    p.add_row({3.0, 2.0}, lp::Sense::le, 18.0);
    const auto s = p.solve();
    REQUIRE(s.status == lp::Status::optimal);
    CHECK(s.objective == doctest::Approx(36.0));
    CHECK(s.x[0] == doctest::Approx(2.0));
    CHECK(s.x[1] == doctest::Approx(6.0));
    REQUIRE(s.duals.size() == 3);
    CHECK(s.duals[0] == doctest::Approx(0.0));
    CHECK(s.duals[1] == doctest::Approx(1.5));
    CHECK(s.duals[2] == doctest::Approx(1.0));
  }

  TEST_CASE("equality rows, free variables, infeasible and unbounded") {
    lp::Problem p(2);
    p.set_objective({1.0, 1.0}, false);
    p.set_free(1);
    p.add_row({1.0, 1.0}, lp::Sense::eq, 1.0);
    p.add_row({0.0, 1.0}, lp::Sense::ge, -2.0);
    auto s = p.solve();
    REQUIRE(s.status == lp::Status::optimal);
    CHECK(s.objective == doctest::Approx(1.0));

    lp::Problem q(1);
    q.set_objective({1.0}, false);
    q.add_row({1.0}, lp::Sense::le, -1.0);
    CHECK(q.solve().status == lp::Status::infeasible);

    lp::Problem u(1);
    u.set_objective({1.0}, true);
    u.add_row({-1.0}, lp::Sense::le, 1.0);
    CHECK(u.solve().status == lp::Status::unbounded);
  }

  TEST_CASE("strong duality on random feasible problems, with and without perturbation") {
    rng::Stream rs(9, 0);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 3 + rs.below(6), m = 2 + rs.below(6);
      lp::Problem p(n);
      std::vector<double> c(n);
      for (double& v : c) v = rs.uniform();
      p.set_objective(c, true);
      std::vector<std::vector<double>> A;
      std::vector<double> b;
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> a(n);
        for (double& v : a) v = 0.1 + rs.uniform();
        A.push_back(a);
        b.push_back(1.0 + rs.uniform());
        p.add_row(a, lp::Sense::le, b.back());
      }
      for (double perturb : {0.0, 1e-7}) {
        lp::Options o;
        o.perturb = perturb;
        const auto s = p.solve(o);
        REQUIRE(s.status == lp::Status::optimal);
        double dual_obj = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          CHECK(s.duals[i] >= -1e-9);
          dual_obj += s.duals[i] * b[i];
          double row = 0.0;
          for (std::size_t j = 0; j < n; ++j) row += A[i][j] * s.x[j];
          CHECK(row <= b[i] + 1e-9);
        }
        CHECK(dual_obj == doctest::Approx(s.objective).epsilon(1e-8));
        for (std::size_t j = 0; j < n; ++j) {
          double col = 0.0;
          for (std::size_t i = 0; i < m; ++i) col += A[i][j] * s.duals[i];
          CHECK(col >= c[j] - 1e-8);
        }
      }
    }
  }

  TEST_CASE("degenerate transport problem") {
    // 4 x 4 assignment with ties everywhere.
    const std::size_t k = 4;
    lp::Problem p(k * k);
    std::vector<double> c(k * k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) c[i * k + j] = i == j ? 0.0 : 1.0;
    p.set_objective(c, false);
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<std::pair<std::size_t, double>> row, col;
      for (std::size_t j = 0; j < k; ++j) {
        row.push_back({i * k + j, 1.0});
        col.push_back({j * k + i, 1.0});
      }
      p.add_sparse_row(row, lp::Sense::eq, 0.25);
      p.add_sparse_row(col, lp::Sense::eq, 0.25);
    }
    const auto s = p.solve();
    REQUIRE(s.status == lp::Status::optimal);
    CHECK(s.objective == doctest::Approx(0.0).epsilon(1e-12));
  }
}
