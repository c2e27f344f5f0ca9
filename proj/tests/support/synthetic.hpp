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

#include <algorithm>
#include <cmath>
#include <iterator>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pbm/data.hpp"

namespace pbm::testing {

enum class LabelRule {
  by_cluster,      ///< even clusters +1, odd clusters -1
  split_in_cluster ///< sign of the offset from the cluster center along feature 1
};

/// n points drawn round-robin from isotropic Gaussians around `centers`.
inline Dataset mixture(std::size_t n, const std::vector<std::vector<double>>& centers, double spread,
                       LabelRule rule, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % centers.size();
    std::vector<SparseEntry> entries;
    double offset0 = 0.0;
    for (std::size_t f = 0; f < centers[c].size(); ++f) {
      const double z = noise(rng);
      if (f == 0) offset0 = z;
      entries.push_back({static_cast<std::uint32_t>(f + 1), centers[c][f] + z});
    }
    data.samples.emplace_back(std::move(entries));
    if (rule == LabelRule::by_cluster) {
      data.labels.push_back(c % 2 == 0 ? 1.0 : -1.0);
    } else {
      data.labels.push_back(offset0 >= 0.0 ? 1.0 : -1.0);
    }
    data.dim = std::max<std::size_t>(data.dim, data.samples.back().max_index());
  }
  return data;
}

/// Two overlapping clusters in 2-D, labelled by cluster.
inline Dataset two_clusters(std::size_t n, std::uint64_t seed) {
  return mixture(n, {{-1.0, -1.0}, {1.0, 1.0}}, 1.0, LabelRule::by_cluster, seed);
}

/// Four far-apart clusters in 2-D, each split into two classes.
inline Dataset four_clusters(std::size_t n, std::uint64_t seed) {
  return mixture(n, {{-6.0, -6.0}, {6.0, -6.0}, {-6.0, 6.0}, {6.0, 6.0}}, 1.0, LabelRule::split_in_cluster,
                 seed);
}

/// Sparse random rows with random labels.
inline Dataset random_sparse(std::size_t n, std::size_t dim, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::bernoulli_distribution keep(density);
  std::bernoulli_distribution positive(0.5);
  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<SparseEntry> entries;
    for (std::size_t f = 1; f <= dim; ++f) {
      if (keep(rng)) entries.push_back({static_cast<std::uint32_t>(f), value(rng)});
    }
    if (entries.empty()) entries.push_back({1, value(rng)});
    data.samples.emplace_back(std::move(entries));
    data.labels.push_back(positive(rng) ? 1.0 : -1.0);
    data.dim = std::max<std::size_t>(data.dim, data.samples.back().max_index());
  }
  return data;
}

/// Per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pbm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  write_libsvm(out, data);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pbm::testing
