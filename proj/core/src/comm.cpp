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

#include "pbm/comm.hpp"

#include <algorithm>

namespace pbm {

Collective::Collective(std::size_t workers, std::chrono::milliseconds timeout)
    : k_(workers),
      timeout_(timeout),
      present_(workers, false),
      vectors_(workers),
      scalars_(workers, 0.0),
      ops_(workers, ReduceOp::sum) {
  if (workers == 0) throw std::invalid_argument("collective needs at least one worker");
}

void Collective::check_rank(std::size_t rank) const {
  if (rank >= k_) throw std::out_of_range("worker rank out of range");
}

void Collective::arrive(std::size_t rank, std::unique_lock<std::mutex>& lock) {
  if (aborted_) throw CollectiveError("collective aborted: " + abort_reason_);
  if (present_[rank]) {
    throw CollectiveError("worker " + std::to_string(rank) + " entered the same round twice");
  }
  present_[rank] = true;
  if (++arrived_ == k_) {
    arrived_ = 0;
    ++generation_;
    std::fill(present_.begin(), present_.end(), false);
    cv_.notify_all();
    return;
  }
  const auto gen = generation_;
  const bool released = cv_.wait_for(lock, timeout_, [&] { return generation_ != gen || aborted_; });
  if (!released) {
    aborted_ = true;
    abort_reason_ = "timed out waiting for " + std::to_string(k_ - arrived_) + " worker(s)";
    cv_.notify_all();
    throw CollectiveTimeout("collective: " + abort_reason_);
  }
  if (generation_ == gen) throw CollectiveError("collective aborted: " + abort_reason_);
}

std::vector<double> Collective::reduce_scatter(std::size_t rank, std::span<const double> contribution,
                                               const Partition& partition) {
  check_rank(rank);
  if (partition.k != k_) throw std::invalid_argument("partition block count != worker count");
  std::unique_lock lock(mutex_);
  vectors_[rank] = contribution;
  arrive(rank, lock);
  lock.unlock();

  const std::size_t n = partition.size();
  for (const auto& v : vectors_) {
    if (v.size() != n) {
      throw CollectiveError("reduce_scatter: contribution length " + std::to_string(v.size()) +
                            " != " + std::to_string(n));
    }
  }
  const auto& block = partition.blocks[rank];
  std::vector<double> slice(block.size(), 0.0);
  for (std::size_t t = 0; t < block.size(); ++t) {
    const auto i = block[t];
    double s = 0.0;
    for (std::size_t w = 0; w < k_; ++w) s += vectors_[w][i];
    slice[t] = s;
  }

  lock.lock();
  if (rank == 0) {
    ++rounds_;
    bytes_sent_ += n * sizeof(double);
  }
  arrive(rank, lock);
  return slice;
}

double Collective::allreduce(std::size_t rank, double value, ReduceOp op) {
  check_rank(rank);
  std::unique_lock lock(mutex_);
  scalars_[rank] = value;
  ops_[rank] = op;
  arrive(rank, lock);

  if (std::any_of(ops_.begin(), ops_.end(), [&](ReduceOp o) { return o != ops_[0]; })) {
    throw CollectiveError("allreduce: workers disagree on the reduction op");
  }
  double result = scalars_[0];
  for (std::size_t w = 1; w < k_; ++w) {
    switch (op) {
      case ReduceOp::sum: result += scalars_[w]; break;
      case ReduceOp::min: result = std::min(result, scalars_[w]); break;
      case ReduceOp::max: result = std::max(result, scalars_[w]); break;
    }
  }
  if (rank == 0) {
    ++scalar_rounds_;
    scalar_bytes_ += sizeof(double);
  }
  arrive(rank, lock);
  return result;
}

void Collective::barrier(std::size_t rank) {
  check_rank(rank);
  std::unique_lock lock(mutex_);
  arrive(rank, lock);
}

void Collective::abort(const std::string& reason) {
  std::lock_guard lock(mutex_);
  if (!aborted_) {
    aborted_ = true;
    abort_reason_ = reason;
  }
  cv_.notify_all();
}

std::uint64_t Collective::rounds() const {
  std::lock_guard lock(mutex_);
  return rounds_;
}

std::uint64_t Collective::bytes_sent() const {
  std::lock_guard lock(mutex_);
  return bytes_sent_;
}

std::uint64_t Collective::scalar_bytes() const {
  std::lock_guard lock(mutex_);
  return scalar_bytes_;
}

std::uint64_t Collective::scalar_rounds() const {
  std::lock_guard lock(mutex_);
  return scalar_rounds_;
}

ComputeSlots::ComputeSlots(std::size_t slots)
    : sem_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(slots, 1))) {}

}  // namespace pbm
