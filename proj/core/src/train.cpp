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

#include "pbm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "pbm/comm.hpp"
#include "pbm/parallel.hpp"

namespace pbm {

std::string to_string(PartitionMode mode) { return mode == PartitionMode::random ? "random" : "kmeans"; }

PartitionMode partition_mode_from_string(const std::string& name) {
  if (name == "random") return PartitionMode::random;
  if (name == "kmeans") return PartitionMode::kmeans;
  throw std::invalid_argument("unknown partition mode '" + name + "'");
}

std::string to_string(LineSearchKind kind) { return kind == LineSearchKind::armijo ? "armijo" : "optimal"; }

LineSearchKind line_search_from_string(const std::string& name) {
  if (name == "armijo") return LineSearchKind::armijo;
  if (name == "optimal") return LineSearchKind::optimal;
  throw std::invalid_argument("unknown line search '" + name + "'");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::max_iters: return "max_iters";
    case StopReason::stalled: return "stalled";
  }
  return "unknown";
}

LineSearchKind TrainConfig::resolved_line_search() const {
  if (line_search) return *line_search;
  return loss.kind == LossKind::hinge ? LineSearchKind::optimal : LineSearchKind::armijo;
}

double TrainConfig::resolved_inner_tol() const { return inner_tol ? *inner_tol : 0.1 * outer_tol; }

void TrainConfig::validate() const {
  loss.validate();
  kernel.validate();
  if (workers == 0) throw std::invalid_argument("workers must be >= 1");
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("sigma must lie in (0, 1)");
  if (!(outer_tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (!(resolved_inner_tol() >= 0.0)) throw std::invalid_argument("inner tol must be >= 0");
  if (inner_budget.mode != InnerBudget::Mode::unlimited && inner_budget.amount == 0) {
    throw std::invalid_argument("inner budget must allow at least one update");
  }
  if (resolved_line_search() == LineSearchKind::optimal && loss.kind != LossKind::hinge) {
    throw std::invalid_argument("optimal line search needs the hinge loss");
  }
  if (!(max_imbalance >= 1.0)) throw std::invalid_argument("max imbalance must be >= 1");
  if (kmeans.subsample_size == 0 || kmeans.max_iters == 0) {
    throw std::invalid_argument("kmeans subsample and iteration count must be >= 1");
  }
}

void TrainTrace::write_csv(std::ostream& out) const {
  out << kCsvHeader << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& r : rows) {
    out << r.iter << ',' << r.time_s << ',' << r.objective << ',' << r.residual_inf << ',' << r.beta << ','
        << r.bytes_comm << ',' << r.inner_updates << '\n';
  }
  out.precision(old_precision);
}

std::vector<double> compute_q_times_d(KernelCache& cache, std::span<const std::size_t> block,
                                      std::span<const double> d) {
  if (block.size() != d.size()) throw std::invalid_argument("block and direction differ in length");
  std::vector<double> out(cache.matrix().size(), 0.0);
  for (std::size_t t = 0; t < block.size(); ++t) {
    if (d[t] == 0.0) continue;
    const auto col = cache.column(block[t]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[t] * (*col)[i];
  }
  return out;
}

std::vector<double> projection_residual(const LossSpec& loss, std::span<const double> q_diagonal,
                                        std::span<const double> alpha, std::span<const double> q_alpha,
                                        const BoxBounds& bounds) {
  std::vector<double> out(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = one_var_min(loss, q_diagonal[i], q_alpha[i], alpha[i], bounds.lower[i], bounds.upper[i]);
  }
  return out;
}

double dual_objective(const LossSpec& loss, std::span<const double> alpha, std::span<const double> q_alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += 0.5 * alpha[i] * q_alpha[i] + g_value(loss, alpha[i]);
  return s;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Shared {
  const TrainConfig& config;
  const Partition& partition;
  const QMatrix& q;
  KernelCache& cache;
  Collective& collective;
  ComputeSlots& slots;
  const IterationObserver& observer;
  std::chrono::steady_clock::time_point start;

  // Full-length views; worker r writes only the coordinates of its block.
  std::vector<double> alpha{};
  std::vector<double> q_alpha{};
  std::vector<double> alpha_prev{};
  std::vector<double> d{};
  std::vector<double> q_d{};
  std::vector<std::size_t> block_updates{};

  // Written by worker 0 only.
  TrainTrace trace{};
  StopReason stop = StopReason::max_iters;
  std::size_t iterations = 0;
  double max_drift = 0.0;
};

double recompute_drift(Shared& s) {
  const std::size_t n = s.alpha.size();
  std::vector<double> fresh(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (s.alpha[j] == 0.0) continue;
    const auto col = s.cache.column(j);
    for (std::size_t i = 0; i < n; ++i) fresh[i] += s.alpha[j] * (*col)[i];
  }
  double drift = 0.0;
  for (std::size_t i = 0; i < n; ++i) drift = std::max(drift, std::abs(fresh[i] - s.q_alpha[i]));
  return drift;
}

void run_worker(Shared& s, std::size_t r) {
  const auto& cfg = s.config;
  const auto& block = s.partition.blocks[r];
  const std::size_t m = block.size();
  const LossSpec& loss = cfg.loss;
  const auto reducer = collective_reducer(s.collective, r);
  const auto line_search = cfg.resolved_line_search();
  InnerBudget budget = cfg.inner_budget;
  budget.tolerance = cfg.resolved_inner_tol();

  std::vector<double> lower(m, 0.0);
  std::vector<double> upper(m, loss.C);
  std::vector<double> alpha(m, 0.0);
  std::vector<double> q_alpha(m, 0.0);

  std::optional<BlockHessian> hessian;
  {
    auto slot = s.slots.acquire();
    const double dense_bytes = static_cast<double>(m) * static_cast<double>(m) * sizeof(double);
    if (dense_bytes <= static_cast<double>(cfg.block_memory_bytes)) {
      hessian = BlockHessian::materialize(s.q, block);
    } else {
      hessian = BlockHessian::through_cache(s.cache, block);
    }
  }

  double last_beta = 0.0;
  std::vector<std::size_t> last_updates(s.partition.k, 0);

  for (std::size_t t = 0;; ++t) {
    double local_res = 0.0;
    double local_obj = 0.0;
    {
      auto slot = s.slots.acquire();
      for (std::size_t i = 0; i < m; ++i) {
        const double step = one_var_min(loss, hessian->diagonal(i), q_alpha[i], alpha[i], lower[i], upper[i]);
        local_res = std::max(local_res, std::abs(step));
        local_obj += 0.5 * alpha[i] * q_alpha[i] + g_value(loss, alpha[i]);
      }
    }
    const double residual = s.collective.allreduce(r, local_res, ReduceOp::max);
    const double objective = s.collective.allreduce(r, local_obj, ReduceOp::sum);

    if (r == 0) {
      TraceRow row;
      row.iter = t;
      if (cfg.record_time) {
        row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - s.start).count();
      }
      row.objective = objective;
      row.residual_inf = residual;
      row.beta = last_beta;
      row.bytes_comm = s.collective.bytes_sent();
      row.block_updates = last_updates;
      for (const auto u : last_updates) row.inner_updates += u;
      s.trace.rows.push_back(std::move(row));
      s.iterations = t;
    }
    if (!std::isfinite(objective) || !std::isfinite(residual)) {
      throw std::runtime_error("non-finite objective or residual at iteration " + std::to_string(t));
    }
    if (residual <= cfg.outer_tol) {
      if (r == 0) s.stop = StopReason::converged;
      break;
    }
    if (t == cfg.max_outer_iters) {
      if (r == 0) s.stop = StopReason::max_iters;
      break;
    }

    SubproblemResult sub_result;
    std::vector<double> contribution;
    {
      auto slot = s.slots.acquire();
      const Subproblem sub{&*hessian, q_alpha, alpha, lower, upper, loss};
      sub_result = solve_block(sub, cfg.inner_strategy, budget, mix_seed(cfg.seed, r, t));
      contribution = compute_q_times_d(s.cache, block, sub_result.d);
    }
    s.block_updates[r] = sub_result.inner_updates;
    const auto q_d = s.collective.reduce_scatter(r, contribution, s.partition);
    if (r == 0) last_updates = s.block_updates;

    double local_dmax = 0.0;
    for (const double v : sub_result.d) local_dmax = std::max(local_dmax, std::abs(v));
    const StepSlice slice{alpha, q_alpha, sub_result.d, q_d, lower, upper};
    const double dmax = s.collective.allreduce(r, local_dmax, ReduceOp::max);
    const double slope = dmax == 0.0 ? 0.0 : directional_derivative(loss, slice, reducer);
    if (!(slope < 0.0)) {
      if (r == 0) s.stop = StopReason::stalled;
      break;
    }

    const StepResult step = line_search == LineSearchKind::optimal
                                ? line_search_optimal(loss, slice, reducer)
                                : line_search_armijo(loss, slice, cfg.sigma, s.partition.k, reducer);
    {
      auto slot = s.slots.acquire();
      for (std::size_t i = 0; i < m; ++i) {
        const auto gi = block[i];
        s.alpha_prev[gi] = alpha[i];
        s.d[gi] = sub_result.d[i];
        s.q_d[gi] = q_d[i];
        alpha[i] = std::clamp(alpha[i] + step.beta * sub_result.d[i], lower[i], upper[i]);
        q_alpha[i] += step.beta * q_d[i];
        s.alpha[gi] = alpha[i];
        s.q_alpha[gi] = q_alpha[i];
      }
    }
    last_beta = step.beta;

    if (cfg.verify_every > 0 && (t + 1) % cfg.verify_every == 0) {
      s.collective.barrier(r);
      if (r == 0) s.max_drift = std::max(s.max_drift, recompute_drift(s));
      s.collective.barrier(r);
    }
    if (s.observer) {
      s.collective.barrier(r);
      if (r == 0) {
        IterationView view;
        view.iter = t + 1;
        view.alpha_prev = s.alpha_prev;
        view.d = s.d;
        view.q_d = s.q_d;
        view.alpha = s.alpha;
        view.q_alpha = s.q_alpha;
        view.step = step;
        view.partition = &s.partition;
        s.observer(view);
      }
      s.collective.barrier(r);
    }
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& data, const Partition* partition,
                  const IterationObserver& observer) {
  config.validate();
  data.validate();
  const std::size_t n = data.size();
  const std::size_t k = config.workers;
  if (k > n) throw std::invalid_argument("workers (" + std::to_string(k) + ") exceed sample count");

  TrainResult result;
  if (partition != nullptr) {
    partition->validate();
    if (partition->k != k || partition->size() != n) {
      throw std::invalid_argument("given partition does not match workers / dataset size");
    }
    result.partition = *partition;
  } else if (config.partition_mode == PartitionMode::kmeans) {
    result.partition = kmeans_partition(data, k, config.kmeans);
  } else {
    result.partition = random_partition(n, k, config.seed);
  }
  if (static_cast<double>(result.partition.max_block_size() * k) > config.max_imbalance * static_cast<double>(n)) {
    result.warnings.push_back("unbalanced partition: largest block has " +
                              std::to_string(result.partition.max_block_size()) + " of " + std::to_string(n) +
                              " variables");
  }

  const QMatrix q(data, config.kernel);
  KernelCache cache(q, config.cache_bytes);
  Collective collective(k);
  ComputeSlots slots(config.threads == 0 ? default_threads() : config.threads);

  Shared shared{config, result.partition, q, cache, collective, slots, observer,
                std::chrono::steady_clock::now()};
  shared.alpha.assign(n, 0.0);
  shared.q_alpha.assign(n, 0.0);
  shared.alpha_prev.assign(n, 0.0);
  shared.d.assign(n, 0.0);
  shared.q_d.assign(n, 0.0);
  shared.block_updates.assign(k, 0);

  std::vector<std::exception_ptr> errors(k);
  {
    std::vector<std::jthread> pool;
    pool.reserve(k);
    for (std::size_t r = 0; r < k; ++r) {
      pool.emplace_back([&, r] {
        try {
          run_worker(shared, r);
        } catch (const std::exception& e) {
          errors[r] = std::current_exception();
          collective.abort("worker " + std::to_string(r) + " failed: " + e.what());
        } catch (...) {
          errors[r] = std::current_exception();
          collective.abort("worker " + std::to_string(r) + " failed");
        }
      });
    }
  }
  std::exception_ptr first;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const CollectiveError&) {
      if (!first) first = e;
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (first) std::rethrow_exception(first);

  result.trace = std::move(shared.trace);
  result.stop = shared.stop;
  result.iterations = shared.iterations;
  result.bytes_comm = collective.bytes_sent();
  result.scalar_bytes = collective.scalar_bytes();
  result.cache_hits = cache.hits();
  result.cache_misses = cache.misses();
  result.kernel_evaluations = q.evaluations();
  result.max_q_alpha_drift = shared.max_drift;
  result.state.alpha = std::move(shared.alpha);
  result.state.q_alpha = std::move(shared.q_alpha);
  result.state.objective = result.trace.rows.back().objective;
  result.state.bounds = BoxBounds::for_loss(config.loss, n);
  result.last_alpha = std::move(shared.alpha_prev);
  result.last_direction = std::move(shared.d);
  result.model = build_model(data, config.loss, config.kernel, result.state.alpha, &result.partition,
                             result.last_alpha, result.last_direction);
  return result;
}

}  // namespace pbm
