/*
 * Copyright 2026 The PBM Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>

#include "doctest.h"
#include "pbm/oracle.hpp"
#include "pbm/train.hpp"
#include "synthetic.hpp"

using namespace pbm;

TEST_SUITE("oracle") {
  TEST_CASE("solve_dense: 1-D vertex inside the box") {
    const auto p = oracle::DenseProblem::dual({1, {1.0}}, {LossKind::hinge, 1.0});
    const auto a = oracle::solve_dense(p, 1e-10);
    CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("solve_dense: separable problem clipped to C") {
    oracle::DenseMatrix q{4, std::vector<double>(16, 0.0)};
    for (std::size_t i = 0; i < 4; ++i) q(i, i) = 1.0;
    const auto p = oracle::DenseProblem::dual(q, {LossKind::hinge, 0.3});
    for (const double a : oracle::solve_dense(p, 1e-10)) CHECK(a == doctest::Approx(0.3).epsilon(1e-9));
  }

  TEST_CASE("solve_dense agrees with a k = 1 exact train on n = 100") {
    const auto data = testing::random_sparse(100, 8, 0.5, 51);
    for (const auto kind : {LossKind::hinge, LossKind::logistic}) {
      TrainConfig c;
      c.loss = {kind, 1.0};
      c.kernel = KernelSpec::gaussian(0.5);
      c.workers = 1;
      c.inner_budget = InnerBudget::unlimited(0.0);
      c.inner_tol = 1e-10;
      c.outer_tol = 1e-8;
      c.record_time = false;
      const auto r = train(c, data);
      const auto p = oracle::DenseProblem::dual(oracle::dense_q(data, c.kernel), c.loss);
      const auto a = oracle::solve_dense(p, 1e-9);
      const double f = oracle::dense_objective(p, a);
      CHECK(std::abs(r.state.objective - f) <= 1e-6 * std::abs(f));
      CHECK(oracle::dense_residual_inf(p, a) <= 1e-10);
    }
  }

  TEST_CASE("solve_dense reports non-convergence") {
    const auto data = testing::random_sparse(30, 5, 0.5, 52);
    const auto p = oracle::DenseProblem::dual(oracle::dense_q(data, KernelSpec::gaussian(0.5)), {LossKind::hinge, 1.0});
    CHECK_THROWS_AS(oracle::solve_dense(p, 1e-12, 3), std::runtime_error);
  }

  TEST_CASE("dense_g and dense_objective from the definitions") {
    CHECK(oracle::dense_g({LossKind::hinge, 1.0}, 0.25) == -0.25);
    CHECK(oracle::dense_g({LossKind::logistic, 1.0}, 0.5) == doctest::Approx(-std::log(2.0)));
    const auto p = oracle::DenseProblem::dual({2, {2.0, 1.0, 1.0, 2.0}}, {LossKind::hinge, 1.0});
    // 0.5 [1 1] Q [1 1]' - 2 = 3 - 2
    CHECK(oracle::dense_objective(p, std::vector<double>{1.0, 1.0}) == doctest::Approx(1.0));
  }

  TEST_CASE("grid_line_search finds the grid minimizer") {
    const double b = oracle::grid_line_search([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0, 11);
    CHECK(b == doctest::Approx(0.3));
    const double edge = oracle::grid_line_search([](double x) { return -x; }, -1.0, 2.0, 1001);
    CHECK(edge == 2.0);
  }

  TEST_CASE("exact_subproblem is optimal for its block objective") {
    const auto data = testing::random_sparse(12, 4, 0.6, 53);
    const auto q = oracle::dense_q(data, KernelSpec::gaussian(0.7));
    const LossSpec loss{LossKind::hinge, 1.0};
    const std::vector<double> alpha(12, 0.2);
    const auto qa = oracle::dense_multiply(q, alpha);
    const std::vector<double> lo(12, 0.0);
    const std::vector<double> hi(12, 1.0);
    const auto d = oracle::exact_subproblem(q, qa, alpha, lo, hi, loss, 1e-10);
    const double best = oracle::subproblem_value(q, qa, alpha, loss, d);
    CHECK(oracle::subproblem_value(q, qa, alpha, loss, std::vector<double>(12, 0.0)) >= best);
    for (std::size_t i = 0; i < 12; ++i) {
      for (const double h : {-1e-3, 1e-3}) {
        auto probe = d;
        probe[i] = std::clamp(alpha[i] + probe[i] + h, 0.0, 1.0) - alpha[i];
        CHECK(oracle::subproblem_value(q, qa, alpha, loss, probe) >= best - 1e-12);
      }
    }
  }

  TEST_CASE("naive kernel formula") {
    const SparseVector x{{1, 1.0}, {3, 2.0}};
    const SparseVector z{{2, 1.0}, {3, 1.0}};
    CHECK(oracle::naive_kernel(KernelSpec::gaussian(0.5), x, z) == doctest::Approx(std::exp(-0.5 * 3.0)));
    CHECK(oracle::naive_kernel(KernelSpec::linear(), x, z) == doctest::Approx(2.0));
  }
}
