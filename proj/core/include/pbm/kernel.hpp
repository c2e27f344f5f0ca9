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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <list>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pbm/data.hpp"

namespace pbm {

enum class KernelKind { gaussian, linear };

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double gamma = 1.0;  ///< Only used by the gaussian kernel; must be > 0 there.

  static KernelSpec gaussian(double gamma) { return {KernelKind::gaussian, gamma}; }
  static KernelSpec linear() { return {KernelKind::linear, 0.0}; }

  void validate() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// K(x, z): exp(-gamma ||x - z||^2) or x.z. The distance is a sparse merge,
/// never ||x||^2 + ||z||^2 - 2 x.z, so values near 1 stay accurate.
double kernel_eval(const KernelSpec& spec, const SparseVector& x, const SparseVector& z);

/// Q_ij = y_i y_j K(x_i, x_j) over a dataset. Indices are 0-based.
class QMatrix {
 public:
  QMatrix(const Dataset& data, KernelSpec spec);

  [[nodiscard]] std::size_t size() const noexcept { return data_->size(); }
  [[nodiscard]] const Dataset& dataset() const noexcept { return *data_; }
  [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }

  /// Throws std::out_of_range on a bad index.
  [[nodiscard]] double entry(std::size_t i, std::size_t j) const;
  [[nodiscard]] double diagonal(std::size_t i) const { return entry(i, i); }

  /// Column j of Q written into `out` (size n).
  void column(std::size_t j, std::span<double> out) const;

  /// Number of kernel evaluations performed so far (diagnostics).
  [[nodiscard]] std::uint64_t evaluations() const noexcept {
    return evaluations_.load(std::memory_order_relaxed);
  }

 private:
  const Dataset* data_;
  KernelSpec spec_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
};

/// LRU cache of whole Q columns with a byte budget.
///
/// Safe for concurrent use. Returned columns are shared, so eviction never
/// invalidates a vector a caller already holds. A zero capacity disables
/// storage; every request then recomputes.
class KernelCache {
 public:
  using Column = std::shared_ptr<const std::vector<double>>;

  static constexpr std::size_t kDefaultCapacityBytes = std::size_t{1} << 30;

  explicit KernelCache(const QMatrix& q, std::size_t capacity_bytes = kDefaultCapacityBytes);

  [[nodiscard]] Column column(std::size_t j);

  [[nodiscard]] const QMatrix& matrix() const noexcept { return *q_; }
  [[nodiscard]] std::size_t capacity_bytes() const noexcept { return capacity_bytes_; }
  [[nodiscard]] std::size_t stored_bytes() const;
  [[nodiscard]] std::size_t stored_columns() const;
  [[nodiscard]] std::uint64_t hits() const noexcept { return hits_.load(std::memory_order_relaxed); }
  [[nodiscard]] std::uint64_t misses() const noexcept { return misses_.load(std::memory_order_relaxed); }

 private:
  struct Slot {
    Column column;
    std::list<std::size_t>::iterator lru;
  };

  [[nodiscard]] std::size_t column_bytes() const noexcept { return q_->size() * sizeof(double); }

  const QMatrix* q_;
  std::size_t capacity_bytes_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::size_t, Slot> slots_;
  std::list<std::size_t> lru_;  // front = most recently used
  std::size_t stored_bytes_ = 0;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

}  // namespace pbm
