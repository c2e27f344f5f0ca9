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

#include "pbm/kernel.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace pbm {

void KernelSpec::validate() const {
  if (kind == KernelKind::gaussian && !(gamma > 0.0 && std::isfinite(gamma))) {
    throw std::invalid_argument("gaussian kernel needs gamma > 0");
  }
}

std::string to_string(KernelKind kind) {
  return kind == KernelKind::gaussian ? "gaussian" : "linear";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "gaussian" || name == "rbf") return KernelKind::gaussian;
  if (name == "linear") return KernelKind::linear;
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

double kernel_eval(const KernelSpec& spec, const SparseVector& x, const SparseVector& z) {
  if (spec.kind == KernelKind::linear) return x.dot(z);
  return std::exp(-spec.gamma * x.squared_distance(z));
}

QMatrix::QMatrix(const Dataset& data, KernelSpec spec) : data_(&data), spec_(spec) {
  spec_.validate();
}

double QMatrix::entry(std::size_t i, std::size_t j) const {
  const auto n = size();
  if (i >= n || j >= n) throw std::out_of_range("Q index out of range");
  evaluations_.fetch_add(1, std::memory_order_relaxed);
  const auto& d = *data_;
  return d.labels[i] * d.labels[j] * kernel_eval(spec_, d.samples[i], d.samples[j]);
}

void QMatrix::column(std::size_t j, std::span<double> out) const {
  const auto n = size();
  if (j >= n) throw std::out_of_range("Q column out of range");
  if (out.size() != n) throw std::invalid_argument("column buffer has wrong size");
  const auto& d = *data_;
  const auto& xj = d.samples[j];
  const double yj = d.labels[j];
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = d.labels[i] * yj * kernel_eval(spec_, d.samples[i], xj);
  }
  evaluations_.fetch_add(n, std::memory_order_relaxed);
}

KernelCache::KernelCache(const QMatrix& q, std::size_t capacity_bytes)
    : q_(&q), capacity_bytes_(capacity_bytes) {}

KernelCache::Column KernelCache::column(std::size_t j) {
  if (j >= q_->size()) throw std::out_of_range("Q column out of range");
  {
    std::unique_lock lock(mutex_);
    if (auto it = slots_.find(j); it != slots_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.lru);
      hits_.fetch_add(1, std::memory_order_relaxed);
      return it->second.column;
    }
  }

  // Computed outside the lock; concurrent misses on one column both compute
  // the same values and the first insertion wins.
  misses_.fetch_add(1, std::memory_order_relaxed);
  auto fresh = std::make_shared<std::vector<double>>(q_->size());
  q_->column(j, *fresh);
  Column result = std::move(fresh);

  const auto bytes = column_bytes();
  if (bytes > capacity_bytes_) return result;

  std::unique_lock lock(mutex_);
  if (auto it = slots_.find(j); it != slots_.end()) return it->second.column;
  while (stored_bytes_ + bytes > capacity_bytes_ && !lru_.empty()) {
    const auto victim = lru_.back();
    lru_.pop_back();
    slots_.erase(victim);
    stored_bytes_ -= bytes;
  }
  lru_.push_front(j);
  slots_.emplace(j, Slot{result, lru_.begin()});
  stored_bytes_ += bytes;
  return result;
}

std::size_t KernelCache::stored_bytes() const {
  std::shared_lock lock(mutex_);
  return stored_bytes_;
}

std::size_t KernelCache::stored_columns() const {
  std::shared_lock lock(mutex_);
  return slots_.size();
}

}  // namespace pbm
