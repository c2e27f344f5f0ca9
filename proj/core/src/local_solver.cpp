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

#include "pbm/local_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pbm {

BlockHessian BlockHessian::dense(std::vector<double> values, std::size_t dim) {
  if (values.size() != dim * dim) throw std::invalid_argument("dense block has wrong size");
  BlockHessian h;
  h.dim_ = dim;
  h.values_ = std::move(values);
  h.diagonal_.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) h.diagonal_[i] = h.values_[i * dim + i];
  return h;
}

BlockHessian BlockHessian::materialize(const QMatrix& q, std::span<const std::size_t> block) {
  const std::size_t m = block.size();
  std::vector<double> values(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      const double v = q.entry(block[i], block[j]);
      values[i * m + j] = v;
      values[j * m + i] = v;
    }
  }
  return dense(std::move(values), m);
}

BlockHessian BlockHessian::through_cache(KernelCache& cache, std::vector<std::size_t> block) {
  BlockHessian h;
  h.dim_ = block.size();
  h.cache_ = &cache;
  h.diagonal_.resize(h.dim_);
  for (std::size_t i = 0; i < h.dim_; ++i) h.diagonal_[i] = cache.matrix().diagonal(block[i]);
  h.block_ = std::move(block);
  return h;
}

double BlockHessian::entry(std::size_t i, std::size_t j) const {
  if (cache_ == nullptr) return values_[i * dim_ + j];
  return cache_->matrix().entry(block_[i], block_[j]);
}

std::span<const double> BlockHessian::column(std::size_t j, std::vector<double>& scratch) const {
  if (cache_ == nullptr) return {values_.data() + j * dim_, dim_};  // symmetric: row j == column j
  const auto full = cache_->column(block_[j]);
  scratch.resize(dim_);
  for (std::size_t i = 0; i < dim_; ++i) scratch[i] = (*full)[block_[i]];
  return scratch;
}

void BlockHessian::multiply(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  std::vector<double> scratch;
  for (std::size_t j = 0; j < dim_; ++j) {
    if (x[j] == 0.0) continue;
    const auto col = column(j, scratch);
    for (std::size_t i = 0; i < dim_; ++i) y[i] += col[i] * x[j];
  }
}

void Subproblem::validate() const {
  const auto m = alpha.size();
  if (hessian == nullptr || hessian->size() != m || q_alpha.size() != m || lower.size() != m ||
      upper.size() != m) {
    throw std::invalid_argument("subproblem slices have inconsistent sizes");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(hessian->diagonal(i) > 0.0)) throw std::invalid_argument("block diagonal must be > 0");
  }
}

std::string to_string(InnerStrategy s) {
  switch (s) {
    case InnerStrategy::greedy: return "greedy";
    case InnerStrategy::random: return "random";
    case InnerStrategy::cyclic: return "cyclic";
  }
  return "greedy";
}

InnerStrategy inner_strategy_from_string(const std::string& name) {
  if (name == "greedy") return InnerStrategy::greedy;
  if (name == "random" || name == "stochastic") return InnerStrategy::random;
  if (name == "cyclic") return InnerStrategy::cyclic;
  throw std::invalid_argument("unknown inner strategy '" + name + "'");
}

std::string to_string(const InnerBudget& budget) {
  switch (budget.mode) {
    case InnerBudget::Mode::unlimited: return "unlimited";
    case InnerBudget::Mode::updates: return std::to_string(budget.amount);
    case InnerBudget::Mode::epochs: return std::to_string(budget.amount) + "epochs";
  }
  return "unlimited";
}

InnerBudget inner_budget_from_string(const std::string& text, double tolerance) {
  if (text == "unlimited") return InnerBudget::unlimited(tolerance);
  std::string digits = text;
  auto mode = InnerBudget::Mode::updates;
  for (const std::string suffix : {"epochs", "epoch"}) {
    if (digits.size() > suffix.size() && digits.ends_with(suffix)) {
      digits.resize(digits.size() - suffix.size());
      mode = InnerBudget::Mode::epochs;
      break;
    }
  }
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw std::invalid_argument("bad inner budget '" + text + "'");
  }
  return {mode, static_cast<std::size_t>(std::stoull(digits)), tolerance};
}

double subproblem_objective(const Subproblem& sub, std::span<const double> delta) {
  const auto m = sub.size();
  std::vector<double> qd(m);
  sub.hessian->multiply(delta, qd);
  double f = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    f += 0.5 * delta[i] * qd[i] + g_value(sub.loss, sub.alpha[i] + delta[i]) + sub.q_alpha[i] * delta[i];
  }
  return f;
}

double projected_gradient_score(const Subproblem& sub, std::size_t i, double delta_i, double q_delta_i) {
  const double u = sub.alpha[i] + delta_i;
  const double grad = q_delta_i + sub.q_alpha[i] + g_derivative(sub.loss, u);
  return std::abs(std::clamp(u - grad, sub.lower[i], sub.upper[i]) - u);
}

std::size_t greedy_select(const Subproblem& sub, std::span<const double> delta,
                          std::span<const double> q_delta) {
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const double s = projected_gradient_score(sub, i, delta[i], q_delta[i]);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

namespace {

// Coordinate descent state for one block: Delta and the maintained Q_SS Delta.
class BlockDescent {
 public:
  explicit BlockDescent(const Subproblem& sub)
      : sub_(sub), delta_(sub.size(), 0.0), q_delta_(sub.size(), 0.0) {}

  void update(std::size_t i) {
    const double u = sub_.alpha[i] + delta_[i];
    const double q_ii = sub_.hessian->diagonal(i);
    const double linear = q_delta_[i] + sub_.q_alpha[i];
    const double step = one_var_min(sub_.loss, q_ii, linear, u, sub_.lower[i], sub_.upper[i]);
    ++updates_;
    if (step == 0.0) return;
    // Exact change of f along coordinate i.
    drop_ -= 0.5 * q_ii * step * step + linear * step + g_value(sub_.loss, u + step) -
             g_value(sub_.loss, u);
    delta_[i] += step;
    const auto col = sub_.hessian->column(i, scratch_);
    for (std::size_t r = 0; r < col.size(); ++r) q_delta_[r] += step * col[r];
  }

  [[nodiscard]] double score(std::size_t i) const {
    return projected_gradient_score(sub_, i, delta_[i], q_delta_[i]);
  }

  [[nodiscard]] double max_score() const {
    double s = 0.0;
    for (std::size_t i = 0; i < delta_.size(); ++i) s = std::max(s, score(i));
    return s;
  }

  [[nodiscard]] std::size_t select() const { return greedy_select(sub_, delta_, q_delta_); }

  SubproblemResult finish() {
    return {std::move(delta_), std::move(q_delta_), std::max(drop_, 0.0), updates_};
  }

 private:
  const Subproblem& sub_;
  std::vector<double> delta_;
  std::vector<double> q_delta_;
  std::vector<double> scratch_;
  double drop_ = 0.0;
  std::size_t updates_ = 0;
};

// Upper bound on the work of an "unlimited" solve, in epochs.
constexpr std::size_t kUnlimitedEpochCap = 5000;

}  // namespace

SubproblemResult solve_block(const Subproblem& sub, InnerStrategy strategy, const InnerBudget& budget,
                             std::uint64_t seed) {
  sub.validate();
  const std::size_t m = sub.size();
  if (budget.mode != InnerBudget::Mode::unlimited && budget.amount == 0) {
    throw std::invalid_argument("inner budget must allow at least one update");
  }
  BlockDescent state(sub);
  if (m == 0) return state.finish();

  const double tol = budget.tolerance;
  const bool unlimited = budget.mode == InnerBudget::Mode::unlimited;

  if (strategy == InnerStrategy::greedy) {
    std::size_t max_updates = unlimited ? kUnlimitedEpochCap * m : budget.amount;
    if (budget.mode == InnerBudget::Mode::epochs) max_updates = budget.amount * m;
    for (std::size_t t = 0; t < max_updates; ++t) {
      const auto i = state.select();
      const double s = state.score(i);
      if (s <= tol || s == 0.0) break;
      state.update(i);
    }
    return state.finish();
  }

  if (state.max_score() <= tol) return state.finish();

  if (strategy == InnerStrategy::random) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    std::size_t max_updates = unlimited ? kUnlimitedEpochCap * m : budget.amount;
    if (budget.mode == InnerBudget::Mode::epochs) max_updates = budget.amount * m;
    for (std::size_t t = 1; t <= max_updates; ++t) {
      state.update(pick(rng));
      if (t % m == 0 && state.max_score() <= tol) break;
    }
    return state.finish();
  }

  const std::size_t epochs = unlimited ? kUnlimitedEpochCap : budget.amount;
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < m; ++i) state.update(i);
    if (state.max_score() <= tol) break;
  }
  return state.finish();
}

}  // namespace pbm
