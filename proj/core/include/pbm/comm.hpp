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

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <semaphore>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbm/partition.hpp"

namespace pbm {

enum class ReduceOp { sum, min, max };

class CollectiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A worker did not arrive in time.
class CollectiveTimeout : public CollectiveError {
 public:
  using CollectiveError::CollectiveError;
};

/// Rendezvous among k barrier-synchronized in-process workers.
///
/// Every worker must enter every collective exactly once per round; the call
/// blocks until all k have arrived. Reductions always add contributions in
/// ascending worker order, so results are bit-reproducible. abort() wakes all
/// waiting workers with a CollectiveError.
class Collective {
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{std::chrono::minutes(30)};

  explicit Collective(std::size_t workers, std::chrono::milliseconds timeout = kDefaultTimeout);

  /// Worker `rank` contributes a length-n vector and receives
  /// (sum_s contribution_s)[partition.blocks[rank]].
  std::vector<double> reduce_scatter(std::size_t rank, std::span<const double> contribution,
                                     const Partition& partition);

  /// Every worker receives the same reduction of the k values.
  double allreduce(std::size_t rank, double value, ReduceOp op);

  /// Rendezvous without data exchange; not metered.
  void barrier(std::size_t rank);

  void abort(const std::string& reason);

  [[nodiscard]] std::size_t workers() const noexcept { return k_; }
  /// Completed reduce-scatter rounds.
  [[nodiscard]] std::uint64_t rounds() const;
  /// Reduce-scatter payload: n * sizeof(double) per round.
  [[nodiscard]] std::uint64_t bytes_sent() const;
  /// Scalar all-reduce traffic, metered separately: sizeof(double) per call.
  [[nodiscard]] std::uint64_t scalar_bytes() const;
  [[nodiscard]] std::uint64_t scalar_rounds() const;

 private:
  void arrive(std::size_t rank, std::unique_lock<std::mutex>& lock);
  void check_rank(std::size_t rank) const;

  std::size_t k_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t arrived_ = 0;
  std::uint64_t generation_ = 0;
  std::vector<bool> present_;
  bool aborted_ = false;
  std::string abort_reason_;

  std::vector<std::span<const double>> vectors_;
  std::vector<double> scalars_;
  std::vector<ReduceOp> ops_;

  std::uint64_t rounds_ = 0;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t scalar_rounds_ = 0;
  std::uint64_t scalar_bytes_ = 0;
};

/// Caps how many logical workers compute at once. Workers hold a slot while
/// computing and give it back before blocking in a collective.
class ComputeSlots {
 public:
  explicit ComputeSlots(std::size_t slots);

  class Guard {
   public:
    explicit Guard(ComputeSlots& s) : slots_(&s) { slots_->sem_.acquire(); }
    ~Guard() { slots_->sem_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    ComputeSlots* slots_;
  };

  [[nodiscard]] Guard acquire() { return Guard(*this); }

 private:
  std::counting_semaphore<> sem_;
};

}  // namespace pbm
