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

#include "pbm/data.hpp"
#include "pbm/kernel.hpp"
#include "pbm/loss.hpp"

/// Brute-force reference implementations for tests. Nothing here calls into
/// the solver's kernel, loss or optimization code paths.
namespace pbm::oracle {

/// Dense row-major matrix.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

/// K(x, z) through ||x||^2 + ||z||^2 - 2 x.z on densified vectors.
double naive_kernel(const KernelSpec& spec, const SparseVector& x, const SparseVector& z);

/// Q_ij = y_i y_j K(x_i, x_j) for all pairs.
DenseMatrix dense_q(const Dataset& data, const KernelSpec& spec);

/// min 0.5 u'Qu + c'u + sum_i g(u_i)  s.t.  lower <= u <= upper.
struct DenseProblem {
  DenseMatrix q;
  std::vector<double> linear;  ///< c; empty means zero
  LossSpec loss;
  std::vector<double> lower;
  std::vector<double> upper;

  static DenseProblem dual(DenseMatrix q, const LossSpec& loss);
  [[nodiscard]] std::size_t size() const noexcept { return q.n; }
};

/// g(u) evaluated from its definition.
double dense_g(const LossSpec& loss, double u);
double dense_objective(const DenseProblem& p, std::span<const double> u);
std::vector<double> dense_multiply(const DenseMatrix& q, std::span<const double> x);

/// T(u) - u by bisection on each coordinate's 1-D derivative.
std::vector<double> dense_residual(const DenseProblem& p, std::span<const double> u);
double dense_residual_inf(const DenseProblem& p, std::span<const double> u);

/// Accelerated proximal gradient with adaptive restart until
/// ||T(u) - u||_inf <= tol / 10. Throws std::runtime_error after max_iters.
std::vector<double> solve_dense(const DenseProblem& p, double tol, std::size_t max_iters = 1'000'000);

/// argmin of f over `resolution` uniformly spaced points of [lo, hi].
double grid_line_search(const std::function<double(double)>& f, double lo, double hi, std::size_t resolution);

/// argmin_D 0.5 D'Q D + sum_i g(alpha_i + D_i) + (Q alpha)_i D_i over the box,
/// solved with solve_dense.
std::vector<double> exact_subproblem(const DenseMatrix& q_block, std::span<const double> q_alpha,
                                     std::span<const double> alpha, std::span<const double> lower,
                                     std::span<const double> upper, const LossSpec& loss, double tol);

/// 0.5 D'Q D + sum_i g(alpha_i + D_i) + (Q alpha)_i D_i.
double subproblem_value(const DenseMatrix& q_block, std::span<const double> q_alpha,
                        std::span<const double> alpha, const LossSpec& loss, std::span<const double> delta);

}  // namespace pbm::oracle
