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
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbm/data.hpp"
#include "pbm/kernel.hpp"
#include "pbm/line_search.hpp"
#include "pbm/local_solver.hpp"
#include "pbm/loss.hpp"
#include "pbm/partition.hpp"
#include "pbm/predict.hpp"

namespace pbm {

enum class PartitionMode { random, kmeans };
enum class LineSearchKind { armijo, optimal };

std::string to_string(PartitionMode mode);
PartitionMode partition_mode_from_string(const std::string& name);
std::string to_string(LineSearchKind kind);
LineSearchKind line_search_from_string(const std::string& name);

struct TrainConfig {
  LossSpec loss;
  KernelSpec kernel;
  std::size_t workers = 4;
  PartitionMode partition_mode = PartitionMode::kmeans;
  KMeansOptions kmeans;
  double sigma = 0.01;
  /// Unset: optimal for hinge, armijo for logistic.
  std::optional<LineSearchKind> line_search;
  InnerStrategy inner_strategy = InnerStrategy::greedy;
  InnerBudget inner_budget = InnerBudget::epochs(5);
  /// Unset: 0.1 * outer_tol. Overrides inner_budget.tolerance.
  std::optional<double> inner_tol;
  double outer_tol = 1e-3;
  std::size_t max_outer_iters = 1000;
  std::uint64_t seed = 1;
  std::size_t cache_bytes = KernelCache::kDefaultCapacityBytes;
  /// Per-worker budget for a dense Q_{S,S}; larger blocks go through the cache.
  std::size_t block_memory_bytes = std::size_t{512} << 20;
  /// Physical compute threads; 0 = default_threads().
  std::size_t threads = 0;
  /// Recompute Q alpha from kernel columns every this many iterations (0 = never).
  std::size_t verify_every = 0;
  /// Warn when the largest block exceeds max_imbalance * n / k variables.
  double max_imbalance = 4.0;
  /// Record wall time in the trace; off gives byte-reproducible traces.
  bool record_time = true;

  [[nodiscard]] LineSearchKind resolved_line_search() const;
  [[nodiscard]] double resolved_inner_tol() const;
  /// Throws std::invalid_argument on an out-of-range setting.
  void validate() const;
};

/// Dual iterate with its maintained product Q alpha.
struct DualState {
  std::vector<double> alpha;
  std::vector<double> q_alpha;
  double objective = 0.0;
  BoxBounds bounds;
};

struct TraceRow {
  std::size_t iter = 0;
  double time_s = 0.0;
  double objective = 0.0;
  double residual_inf = 0.0;
  double beta = 0.0;  ///< step that produced this iterate (0 for the initial row)
  std::uint64_t bytes_comm = 0;
  std::size_t inner_updates = 0;
  std::vector<std::size_t> block_updates;
};

/// One row per outer iterate; row 0 is alpha_0 = 0.
struct TrainTrace {
  std::vector<TraceRow> rows;

  static constexpr const char* kCsvHeader =
      "iter,time_s,objective,residual_inf,beta,bytes_comm,inner_updates";
  void write_csv(std::ostream& out) const;
};

enum class StopReason { converged, max_iters, stalled };
std::string to_string(StopReason reason);

/// Snapshot handed to the observer after each accepted step. All vectors are
/// full length n.
struct IterationView {
  std::size_t iter = 0;  ///< index of the new iterate
  std::span<const double> alpha_prev;
  std::span<const double> d;
  std::span<const double> q_d;
  std::span<const double> alpha;
  std::span<const double> q_alpha;
  StepResult step;
  const Partition* partition = nullptr;
};

using IterationObserver = std::function<void(const IterationView&)>;

struct TrainResult {
  Model model;
  TrainTrace trace;
  DualState state;
  Partition partition;
  StopReason stop = StopReason::max_iters;
  std::size_t iterations = 0;
  std::uint64_t bytes_comm = 0;
  std::uint64_t scalar_bytes = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t kernel_evaluations = 0;
  /// Largest |maintained - recomputed| of Q alpha over verification passes.
  double max_q_alpha_drift = 0.0;
  /// alpha_t and d_t of the last step (both zero when no step was taken).
  std::vector<double> last_alpha;
  std::vector<double> last_direction;
  std::vector<std::string> warnings;
};

/// Parallel block minimization. When `partition` is given it is used as is
/// (its k must equal config.workers); otherwise one is built per config.
TrainResult train(const TrainConfig& config, const Dataset& data, const Partition* partition = nullptr,
                  const IterationObserver& observer = {});

/// Q_{:,S} d_S, skipping zero entries of d (no kernel work for them).
std::vector<double> compute_q_times_d(KernelCache& cache, std::span<const std::size_t> block,
                                      std::span<const double> d);

/// T(alpha) - alpha, T_i the exact minimizer of f along coordinate i.
std::vector<double> projection_residual(const LossSpec& loss, std::span<const double> q_diagonal,
                                        std::span<const double> alpha, std::span<const double> q_alpha,
                                        const BoxBounds& bounds);

/// 0.5 alpha' q_alpha + sum_i g(alpha_i).
double dual_objective(const LossSpec& loss, std::span<const double> alpha, std::span<const double> q_alpha);

}  // namespace pbm
