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

#include "pbm/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pbm {

std::string to_string(LossKind kind) { return kind == LossKind::hinge ? "hinge" : "logistic"; }

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "hinge" || name == "svm") return LossKind::hinge;
  if (name == "logistic" || name == "lr") return LossKind::logistic;
  throw std::invalid_argument("unknown loss '" + name + "'");
}

void LossSpec::validate() const {
  if (!(C > 0.0 && std::isfinite(C))) throw std::invalid_argument("C must be positive");
}

BoxBounds BoxBounds::for_loss(const LossSpec& loss, std::size_t n) {
  loss.validate();
  return {std::vector<double>(n, 0.0), std::vector<double>(n, loss.C)};
}

void BoxBounds::validate() const {
  if (lower.size() != upper.size()) throw std::invalid_argument("box bound sizes differ");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) throw std::invalid_argument("box bound a > b");
  }
}

namespace {

double x_log_x(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

double logistic_margin(const LossSpec& loss) { return 1e-12 * loss.C; }

double g_value(const LossSpec& loss, double alpha) {
  if (!(alpha >= 0.0 && alpha <= loss.C)) return kOutsideBox;
  if (loss.kind == LossKind::hinge) return -alpha;
  return x_log_x(alpha) + x_log_x(loss.C - alpha);
}

double g_derivative(const LossSpec& loss, double alpha) {
  if (loss.kind == LossKind::hinge) return -1.0;
  const double eps = logistic_margin(loss);
  const double u = std::clamp(alpha, eps, loss.C - eps);
  return std::log(u) - std::log(loss.C - u);
}

namespace {

// Root of h'(u) = q (u - current) + c + log u - log(C - u) on [lo, hi] by
// bracketed Newton.
double logistic_root(const LossSpec& loss, double q, double c, double current, double lo,
                     double hi) {
  const auto slope = [&](double u) { return q * (u - current) + c + std::log(u) - std::log(loss.C - u); };
  if (slope(lo) >= 0.0) return lo;
  if (slope(hi) <= 0.0) return hi;

  double u = std::clamp(current, lo, hi);
  for (int iter = 0; iter < 50; ++iter) {
    const double s = slope(u);
    if (s == 0.0) break;
    if (s < 0.0) {
      lo = u;
    } else {
      hi = u;
    }
    const double curvature = q + 1.0 / u + 1.0 / (loss.C - u);
    double next = u - s / curvature;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - u);
    u = next;
    if (step <= 1e-12 * std::max(1.0, std::abs(u))) break;
  }
  return u;
}

// Shrinks delta by ulps until current + delta lands inside [lower, upper].
double fit_step(double delta, double current, double lower, double upper) {
  while (current + delta > upper) delta = std::nextafter(delta, -HUGE_VAL);
  while (current + delta < lower) delta = std::nextafter(delta, HUGE_VAL);
  return delta;
}

}  // namespace

double one_var_min(const LossSpec& loss, double q_ii, double linear_coef, double current,
                   double lower, double upper) {
  if (!(q_ii > 0.0)) throw std::invalid_argument("one_var_min needs q_ii > 0");
  if (loss.kind == LossKind::hinge) {
    // d/d delta: q delta + c - 1 = 0.
    const double vertex = (1.0 - linear_coef) / q_ii;
    return fit_step(std::clamp(vertex, lower - current, upper - current), current, lower, upper);
  }
  const double eps = logistic_margin(loss);
  const double lo = std::max(lower, eps);
  const double hi = std::min(upper, loss.C - eps);
  if (lo >= hi) return fit_step(std::clamp(0.5 * (lo + hi), lower, upper) - current, current, lower, upper);
  return fit_step(logistic_root(loss, q_ii, linear_coef, current, lo, hi) - current, current, lo, hi);
}

}  // namespace pbm
