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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pbm/comm.hpp"
#include "pbm/loss.hpp"

namespace pbm {

/// One worker's slice of the quantities the line search needs. All spans are
/// aligned to the worker's block.
struct StepSlice {
  std::span<const double> alpha;
  std::span<const double> q_alpha;
  std::span<const double> d;
  std::span<const double> q_d;  ///< (Q d) restricted to the block
  std::span<const double> lower;
  std::span<const double> upper;
};

/// Combines per-worker partial values into the global value every worker sees.
using ScalarReducer = std::function<double(double, ReduceOp)>;

/// Reducer for a single process owning the whole vector.
ScalarReducer local_reducer();
/// Reducer backed by a collective, for worker `rank`.
ScalarReducer collective_reducer(Collective& collective, std::size_t rank);

struct StepResult {
  double beta = 0.0;
  double objective_change = 0.0;       ///< f(alpha + beta d) - f(alpha)
  double directional_derivative = 0.0; ///< grad f(alpha)' d
  std::size_t trials = 0;
};

/// f(alpha + beta d) - f(alpha) from block partial sums:
///   beta d'(Q alpha) + beta^2/2 d'(Q d) + sum_i g(alpha_i + beta d_i) - g(alpha_i).
double objective_change(const LossSpec& loss, const StepSlice& slice, double beta,
                        const ScalarReducer& reduce);

/// grad f(alpha)' d with grad f = Q alpha + g'(alpha).
double directional_derivative(const LossSpec& loss, const StepSlice& slice, const ScalarReducer& reduce);

/// Backtracking over beta in {1, 1/2, 1/4, ...} (with 1/k inserted in order)
/// until both
///   f(alpha + beta d) - f(alpha) <= beta sigma Delta   and
///   f(alpha + beta d) <= f(alpha + d/k)
/// hold. Throws std::runtime_error if Delta >= 0 or beta falls below 2^-60.
StepResult line_search_armijo(const LossSpec& loss, const StepSlice& slice, double sigma,
                              std::size_t k, const ScalarReducer& reduce);

/// Exact minimizer of the quadratic f(alpha + beta d) over the feasible
/// interval {beta : lower <= alpha + beta d <= upper}, for linear g with
/// sum_i g(alpha_i) = p' alpha (hinge: p = -1). Throws if d'Qd <= 0.
StepResult line_search_optimal(const LossSpec& loss, const StepSlice& slice, const ScalarReducer& reduce);

/// Feasible step interval [lo, hi] for the slice (lo <= 0 <= hi when alpha is feasible).
struct StepInterval {
  double lo;
  double hi;
};
StepInterval feasible_step_interval(const StepSlice& slice, const ScalarReducer& reduce);

}  // namespace pbm
