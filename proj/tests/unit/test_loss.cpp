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
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "pbm/loss.hpp"

using namespace pbm;

namespace {

// Golden-section search on a unimodal function over [lo, hi].
template <typename F>
double golden_section(F f, double lo, double hi) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 300 && b - a > 1e-15; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double one_d(const LossSpec& loss, double q, double c, double cur, double delta) {
  return 0.5 * q * delta * delta + c * delta + g_value(loss, cur + delta);
}

}  // namespace

TEST_SUITE("loss") {
  TEST_CASE("g_value examples") {
    const LossSpec hinge{LossKind::hinge, 1.0};
    const LossSpec logistic{LossKind::logistic, 1.0};
    CHECK(g_value(hinge, 0.0) == 0.0);
    CHECK(g_value(hinge, 0.7) == -0.7);
    CHECK(g_value(logistic, 0.0) == 0.0);
    CHECK(g_value(logistic, 1.0) == 0.0);
    CHECK(g_value(logistic, 0.5) == doctest::Approx(-0.693147).epsilon(1e-6));
    CHECK(g_value(logistic, 0.5) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  }

  TEST_CASE("g_value outside the box is the saturating sentinel") {
    const LossSpec hinge{LossKind::hinge, 2.0};
    CHECK(g_value(hinge, -1e-9) == kOutsideBox);
    CHECK(g_value(hinge, 2.0 + 1e-9) == kOutsideBox);
    CHECK(g_value(LossSpec{LossKind::logistic, 1.0}, 1.5) == kOutsideBox);
    // Saturates instead of overflowing to inf.
    CHECK(std::isfinite(g_value(hinge, -1.0) + 1.0));
  }

  TEST_CASE("LossSpec and box validation") {
    CHECK_THROWS(LossSpec{LossKind::hinge, 0.0}.validate());
    CHECK_THROWS(LossSpec{LossKind::hinge, -2.0}.validate());
    const auto box = BoxBounds::for_loss(LossSpec{LossKind::logistic, 3.0}, 4);
    CHECK(box.lower == std::vector<double>(4, 0.0));
    CHECK(box.upper == std::vector<double>(4, 3.0));
    CHECK_THROWS(BoxBounds{{1.0}, {0.0}}.validate());
    CHECK(loss_kind_from_string("logistic") == LossKind::logistic);
    CHECK(loss_kind_from_string(to_string(LossKind::hinge)) == LossKind::hinge);
    CHECK_THROWS(loss_kind_from_string("squared"));
  }

  TEST_CASE("g_derivative") {
    CHECK(g_derivative(LossSpec{LossKind::hinge, 1.0}, 0.3) == -1.0);
    const LossSpec lr{LossKind::logistic, 2.0};
    CHECK(g_derivative(lr, 1.0) == doctest::Approx(0.0));
    CHECK(g_derivative(lr, 0.5) == doctest::Approx(std::log(0.5 / 1.5)));
    CHECK(std::isfinite(g_derivative(lr, 0.0)));
    CHECK(std::isfinite(g_derivative(lr, 2.0)));
  }

  TEST_CASE("one_var_min hinge: interior vertex and clipping") {
    const LossSpec hinge{LossKind::hinge, 1.0};
    CHECK(one_var_min(hinge, 2.0, 0.2, 0.1, 0.0, 1.0) == (1.0 - 0.2) / 2.0);
    // Vertex (1 - (-3)) / 1 = 4 lies beyond b - current = 0.7.
    CHECK(one_var_min(hinge, 1.0, -3.0, 0.3, 0.0, 1.0) == doctest::Approx(0.7));
    CHECK(one_var_min(hinge, 1.0, 5.0, 0.3, 0.0, 1.0) == doctest::Approx(-0.3));
    CHECK_THROWS_AS(one_var_min(hinge, 0.0, 0.0, 0.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(one_var_min(hinge, -1.0, 0.0, 0.0, 0.0, 1.0), std::invalid_argument);
  }

  TEST_CASE("one_var_min logistic matches golden-section search") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> q_dist(0.05, 5.0);
    std::uniform_real_distribution<double> c_dist(-5.0, 5.0);
    std::uniform_real_distribution<double> C_dist(0.1, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      const LossSpec lr{LossKind::logistic, C_dist(rng)};
      const double q = q_dist(rng);
      const double c = c_dist(rng);
      const double cur = lr.C * unit(rng);
      const double delta = one_var_min(lr, q, c, cur, 0.0, lr.C);
      const double ref =
          golden_section([&](double d) { return one_d(lr, q, c, cur, d); }, -cur, lr.C - cur);
      CHECK(std::abs(delta - ref) <= 1e-8 * std::max(1.0, lr.C));
    }
  }

  TEST_CASE("one_var_min stays in the box and never increases the 1-D objective") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> q_dist(0.01, 4.0);
    std::uniform_real_distribution<double> c_dist(-10.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto kind : {LossKind::hinge, LossKind::logistic}) {
      for (int t = 0; t < 500; ++t) {
        const LossSpec loss{kind, 0.5 + 3.0 * unit(rng)};
        const double q = q_dist(rng);
        const double c = c_dist(rng);
        const double lo = 0.0;
        const double hi = loss.C;
        const double cur = loss.C * unit(rng);
        const double delta = one_var_min(loss, q, c, cur, lo, hi);
        CHECK(cur + delta >= lo);
        CHECK(cur + delta <= hi);
        CHECK(one_d(loss, q, c, cur, delta) <= one_d(loss, q, c, cur, 0.0) + 1e-12);
      }
    }
  }

  TEST_CASE("one_var_min at the minimizer returns zero") {
    const LossSpec hinge{LossKind::hinge, 1.0};
    // Vertex at current: (1 - c) / q = 0 when c = 1.
    CHECK(one_var_min(hinge, 3.0, 1.0, 0.4, 0.0, 1.0) == 0.0);
    // At the upper bound with a pull outward.
    CHECK(one_var_min(hinge, 1.0, -2.0, 1.0, 0.0, 1.0) == 0.0);
  }

  TEST_CASE("logistic g is convex on [0, C]") {
    const LossSpec lr{LossKind::logistic, 2.0};
    const double h = 1e-4;
    for (double a = h; a <= lr.C - h; a += 0.01) {
      const double second = g_value(lr, a - h) - 2.0 * g_value(lr, a) + g_value(lr, a + h);
      CHECK(second >= 0.0);
    }
  }

  TEST_CASE("logistic iterates stay strictly inside the box") {
    const LossSpec lr{LossKind::logistic, 1.0};
    const double eps = logistic_margin(lr);
    const double up = one_var_min(lr, 1.0, -1e6, 0.5, 0.0, 1.0);
    CHECK(0.5 + up <= 1.0 - eps + 1e-15);
    CHECK(0.5 + up > 0.5);
    const double down = one_var_min(lr, 1.0, 1e6, 0.5, 0.0, 1.0);
    CHECK(0.5 + down >= eps - 1e-15);
  }
}
