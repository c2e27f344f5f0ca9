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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pbm/kernel.hpp"
#include "pbm/loss.hpp"

namespace pbm {

/// Q restricted to one block, Q_{S,S}. Either materialized densely or served
/// column-wise through the kernel cache when the dense form does not fit.
class BlockHessian {
 public:
  /// Dense symmetric matrix in row-major order.
  static BlockHessian dense(std::vector<double> values, std::size_t dim);
  static BlockHessian materialize(const QMatrix& q, std::span<const std::size_t> block);
  static BlockHessian through_cache(KernelCache& cache, std::vector<std::size_t> block);

  [[nodiscard]] std::size_t size() const noexcept { return dim_; }
  [[nodiscard]] bool is_dense() const noexcept { return cache_ == nullptr; }
  [[nodiscard]] double diagonal(std::size_t i) const { return diagonal_[i]; }
  [[nodiscard]] double entry(std::size_t i, std::size_t j) const;

  /// Column j of Q_{S,S}. For cache-backed blocks the view points into `scratch`.
  [[nodiscard]] std::span<const double> column(std::size_t j, std::vector<double>& scratch) const;

  /// y = Q_{S,S} x.
  void multiply(std::span<const double> x, std::span<double> y) const;

 private:
  BlockHessian() = default;

  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<double> diagonal_;
  KernelCache* cache_ = nullptr;
  std::vector<std::size_t> block_;
};

/// Block subproblem
///   f(D) = 0.5 D' Q_SS D + sum_i gbar_i(D_i),
///   gbar_i(D_i) = g(alpha_i + D_i) + (Q alpha)_i D_i.
/// All spans are indexed locally (0..|S|-1) and must outlive the view.
struct Subproblem {
  const BlockHessian* hessian = nullptr;
  std::span<const double> q_alpha;
  std::span<const double> alpha;
  std::span<const double> lower;
  std::span<const double> upper;
  LossSpec loss;

  [[nodiscard]] std::size_t size() const noexcept { return alpha.size(); }
  void validate() const;
};

struct SubproblemResult {
  std::vector<double> d;
  std::vector<double> q_d;      ///< Q_SS d, maintained incrementally
  double objective_drop = 0.0;  ///< f(0) - f(d) >= 0
  std::size_t inner_updates = 0;
};

enum class InnerStrategy { greedy, random, cyclic };

std::string to_string(InnerStrategy s);
InnerStrategy inner_strategy_from_string(const std::string& name);

/// How much work one block solve may do. `epochs` is scaled by |S|
/// (greedy/random do epochs * |S| updates); `updates` is a raw count for
/// greedy/random and an epoch count for cyclic. `unlimited` runs until the
/// largest projected-gradient score drops to `tolerance`.
struct InnerBudget {
  enum class Mode { epochs, updates, unlimited };
  Mode mode = Mode::epochs;
  std::size_t amount = 5;
  double tolerance = 1e-4;

  static InnerBudget unlimited(double tolerance) { return {Mode::unlimited, 0, tolerance}; }
  static InnerBudget updates(std::size_t count, double tolerance = 0.0) {
    return {Mode::updates, count, tolerance};
  }
  static InnerBudget epochs(std::size_t count, double tolerance = 0.0) {
    return {Mode::epochs, count, tolerance};
  }

  friend bool operator==(const InnerBudget&, const InnerBudget&) = default;
};

std::string to_string(const InnerBudget& budget);
/// "unlimited", "<N>" or "<N>epochs".
InnerBudget inner_budget_from_string(const std::string& text, double tolerance);

/// f(D) of the subproblem, evaluated directly.
double subproblem_objective(const Subproblem& sub, std::span<const double> delta);

/// |P(u_i - grad_i) - u_i| with u = alpha + delta and
/// grad_i = (Q_SS delta)_i + (Q alpha)_i + g'(u_i).
double projected_gradient_score(const Subproblem& sub, std::size_t i, double delta_i,
                                double q_delta_i);

/// Coordinate with the largest projected-gradient score, ties to the lowest
/// index. `q_delta` must equal Q_SS delta.
std::size_t greedy_select(const Subproblem& sub, std::span<const double> delta,
                          std::span<const double> q_delta);

/// Approximate block solve by coordinate descent. Throws std::invalid_argument
/// for an empty budget.
SubproblemResult solve_block(const Subproblem& sub, InnerStrategy strategy,
                             const InnerBudget& budget, std::uint64_t seed = 0);

}  // namespace pbm
