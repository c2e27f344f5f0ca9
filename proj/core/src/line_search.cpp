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

#include "pbm/line_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pbm {

ScalarReducer local_reducer() {
  return [](double v, ReduceOp) { return v; };
}

ScalarReducer collective_reducer(Collective& collective, std::size_t rank) {
  return [&collective, rank](double v, ReduceOp op) { return collective.allreduce(rank, v, op); };
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double g_change(const LossSpec& loss, const StepSlice& slice, double beta) {
  double s = 0.0;
  for (std::size_t i = 0; i < slice.d.size(); ++i) {
    if (slice.d[i] == 0.0) continue;
    s += g_value(loss, slice.alpha[i] + beta * slice.d[i]) - g_value(loss, slice.alpha[i]);
  }
  return s;
}

}  // namespace

double objective_change(const LossSpec& loss, const StepSlice& slice, double beta,
                        const ScalarReducer& reduce) {
  const double a = reduce(dot(slice.d, slice.q_alpha), ReduceOp::sum);
  const double b = reduce(dot(slice.d, slice.q_d), ReduceOp::sum);
  const double g = reduce(g_change(loss, slice, beta), ReduceOp::sum);
  return beta * a + 0.5 * beta * beta * b + g;
}

double directional_derivative(const LossSpec& loss, const StepSlice& slice, const ScalarReducer& reduce) {
  double s = 0.0;
  for (std::size_t i = 0; i < slice.d.size(); ++i) {
    if (slice.d[i] == 0.0) continue;
    s += slice.d[i] * (slice.q_alpha[i] + g_derivative(loss, slice.alpha[i]));
  }
  return reduce(s, ReduceOp::sum);
}

StepResult line_search_armijo(const LossSpec& loss, const StepSlice& slice, double sigma,
                              std::size_t k, const ScalarReducer& reduce) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("sigma must lie in (0, 1)");
  if (k == 0) throw std::invalid_argument("k must be positive");
  StepResult out;
  out.directional_derivative = directional_derivative(loss, slice, reduce);
  if (!(out.directional_derivative < 0.0)) {
    throw std::runtime_error("armijo line search: direction is not a descent direction");
  }

  // The quadratic terms do not depend on beta; only the g-sum is re-reduced per trial.
  const double a = reduce(dot(slice.d, slice.q_alpha), ReduceOp::sum);
  const double b = reduce(dot(slice.d, slice.q_d), ReduceOp::sum);
  const auto change = [&](double beta) {
    return beta * a + 0.5 * beta * beta * b + reduce(g_change(loss, slice, beta), ReduceOp::sum);
  };

  const double inv_k = 1.0 / static_cast<double>(k);
  const double at_inv_k = k == 1 ? 0.0 : change(inv_k);
  constexpr double kMinStep = 0x1p-60;

  double next_power = 1.0;
  bool inv_k_pending = k > 1 && std::ldexp(1.0, std::ilogb(inv_k)) != inv_k;
  while (true) {
    double beta;
    if (inv_k_pending && next_power < inv_k) {
      beta = inv_k;
      inv_k_pending = false;
    } else {
      beta = next_power;
      next_power *= 0.5;
    }
    if (beta < kMinStep) throw std::runtime_error("armijo line search: step size underflow");
    ++out.trials;
    const double c = (k > 1 && beta == inv_k) ? at_inv_k : change(beta);
    if (c <= beta * sigma * out.directional_derivative && (k == 1 || c <= at_inv_k)) {
      out.beta = beta;
      out.objective_change = c;
      return out;
    }
  }
}

StepInterval feasible_step_interval(const StepSlice& slice, const ScalarReducer& reduce) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double lo = -inf;
  double hi = inf;
  for (std::size_t i = 0; i < slice.d.size(); ++i) {
    const double di = slice.d[i];
    if (di == 0.0) continue;
    const double to_upper = (slice.upper[i] - slice.alpha[i]) / di;
    const double to_lower = (slice.lower[i] - slice.alpha[i]) / di;
    if (di > 0.0) {
      hi = std::min(hi, to_upper);
      lo = std::max(lo, to_lower);
    } else {
      hi = std::min(hi, to_lower);
      lo = std::max(lo, to_upper);
    }
  }
  return {reduce(lo, ReduceOp::max), reduce(hi, ReduceOp::min)};
}

StepResult line_search_optimal(const LossSpec& loss, const StepSlice& slice, const ScalarReducer& reduce) {
  if (loss.kind != LossKind::hinge) {
    throw std::invalid_argument("optimal step size needs linear g (hinge loss)");
  }
  // p = -1 for g(alpha) = -alpha.
  double linear_local = 0.0;
  for (std::size_t i = 0; i < slice.d.size(); ++i) {
    linear_local += slice.alpha[i] * slice.q_d[i] - slice.d[i];
  }
  const double linear = reduce(linear_local, ReduceOp::sum);
  const double curvature = reduce(dot(slice.d, slice.q_d), ReduceOp::sum);
  const auto interval = feasible_step_interval(slice, reduce);

  StepResult out;
  out.trials = 1;
  out.directional_derivative = directional_derivative(loss, slice, reduce);
  if (!(curvature > 0.0)) {
    throw std::runtime_error("optimal line search: d'Qd <= 0, no closed-form step");
  }
  out.beta = std::clamp(-linear / curvature, interval.lo, interval.hi);
  out.objective_change = out.beta * linear + 0.5 * out.beta * out.beta * curvature;
  return out;
}

}  // namespace pbm
