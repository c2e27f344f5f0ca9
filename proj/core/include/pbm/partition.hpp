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
#include <optional>
#include <string>
#include <vector>

#include "pbm/data.hpp"
#include "pbm/kernel.hpp"

namespace pbm {

/// Disjoint cover of {0..n-1} by k non-empty blocks. Block ids are 0-based.
struct Partition {
  std::size_t k = 0;
  std::vector<std::uint32_t> assignment;          ///< block id of each variable
  std::vector<std::vector<std::size_t>> blocks;   ///< sorted member lists
  std::optional<std::vector<std::vector<double>>> centers;  ///< dense, kmeans only

  [[nodiscard]] std::size_t size() const noexcept { return assignment.size(); }
  [[nodiscard]] std::size_t max_block_size() const noexcept;

  /// Throws std::logic_error if any invariant is broken.
  void validate() const;

  /// Builds blocks from an assignment vector.
  static Partition from_assignment(std::vector<std::uint32_t> assignment, std::size_t k);

  [[nodiscard]] std::string to_json() const;
  static Partition from_json(const std::string& text);

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Balanced random partition: block sizes are floor(n/k) or ceil(n/k).
Partition random_partition(std::size_t n, std::size_t k, std::uint64_t seed);

struct KMeansOptions {
  std::size_t subsample_size = 20000;
  std::size_t max_iters = 20;
  std::uint64_t seed = 1;
};

/// Lloyd's algorithm with kmeans++ seeding on a uniform subsample, followed by
/// one nearest-center pass over all n points. Empty clusters are repaired by
/// moving the point farthest from its center.
Partition kmeans_partition(const Dataset& data, std::size_t k, const KMeansOptions& options = {});

/// ||x - c||^2 for a sparse x and dense c (indices past c's end count as 0).
double squared_distance_to_center(const SparseVector& x, const std::vector<double>& center);

/// argmin_r ||x - c_r||^2, ties to the lowest id. Throws std::logic_error if
/// the partition has no centers.
std::size_t nearest_center(const Partition& partition, const SparseVector& x);
std::size_t nearest_center(const std::vector<std::vector<double>>& centers, const SparseVector& x);

/// ||Qbar - Q||_F^2: squared mass of Q outside the diagonal blocks. O(n^2)
/// kernel evaluations; diagnostic use on small n.
double block_diag_error(const Dataset& data, const KernelSpec& spec, const Partition& partition);

}  // namespace pbm
