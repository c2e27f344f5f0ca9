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

#include "pbm/partition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace pbm {

std::size_t Partition::max_block_size() const noexcept {
  std::size_t m = 0;
  for (const auto& b : blocks) m = std::max(m, b.size());
  return m;
}

void Partition::validate() const {
  if (k == 0 || blocks.size() != k) throw std::logic_error("partition: block count mismatch");
  std::vector<bool> seen(assignment.size(), false);
  for (std::size_t r = 0; r < k; ++r) {
    if (blocks[r].empty()) throw std::logic_error("partition: empty block");
    for (const auto i : blocks[r]) {
      if (i >= assignment.size() || seen[i]) throw std::logic_error("partition: blocks overlap");
      if (assignment[i] != r) throw std::logic_error("partition: assignment/blocks disagree");
      seen[i] = true;
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw std::logic_error("partition: blocks do not cover all variables");
  }
  if (centers && centers->size() != k) throw std::logic_error("partition: center count mismatch");
}

Partition Partition::from_assignment(std::vector<std::uint32_t> assignment, std::size_t k) {
  Partition p;
  p.k = k;
  p.blocks.assign(k, {});
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= k) throw std::invalid_argument("assignment names a block >= k");
    p.blocks[assignment[i]].push_back(i);
  }
  p.assignment = std::move(assignment);
  p.validate();
  return p;
}

std::string Partition::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["assignment"] = assignment;
  j["centers"] = centers ? nlohmann::json(*centers) : nlohmann::json(nullptr);
  return j.dump();
}

Partition Partition::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  auto p = from_assignment(j.at("assignment").get<std::vector<std::uint32_t>>(),
                           j.at("k").get<std::size_t>());
  if (!j.at("centers").is_null()) p.centers = j.at("centers").get<std::vector<std::vector<double>>>();
  p.validate();
  return p;
}

Partition random_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > n) throw std::invalid_argument("random_partition needs 1 <= k <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::uint32_t> assignment(n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t len = base + (r < extra ? 1 : 0);
    for (std::size_t t = 0; t < len; ++t) assignment[order[pos++]] = static_cast<std::uint32_t>(r);
  }
  return Partition::from_assignment(std::move(assignment), k);
}

double squared_distance_to_center(const SparseVector& x, const std::vector<double>& center) {
  double sum = 0.0;
  auto it = x.entries().begin();
  const auto end = x.entries().end();
  for (std::size_t d = 0; d < center.size(); ++d) {
    double xv = 0.0;
    if (it != end && it->index == d + 1) {
      xv = it->value;
      ++it;
    }
    const double diff = center[d] - xv;
    sum += diff * diff;
  }
  for (; it != end; ++it) sum += it->value * it->value;
  return sum;
}

std::size_t nearest_center(const std::vector<std::vector<double>>& centers, const SparseVector& x) {
  if (centers.empty()) throw std::logic_error("no centers");
  std::size_t best = 0;
  double best_dist = squared_distance_to_center(x, centers[0]);
  for (std::size_t r = 1; r < centers.size(); ++r) {
    const double dist = squared_distance_to_center(x, centers[r]);
    if (dist < best_dist) {
      best_dist = dist;
      best = r;
    }
  }
  return best;
}

std::size_t nearest_center(const Partition& partition, const SparseVector& x) {
  if (!partition.centers) throw std::logic_error("partition has no kmeans centers");
  return nearest_center(*partition.centers, x);
}

namespace {

struct Assignment {
  std::vector<std::uint32_t> cluster;
  std::vector<double> distance;
};

Assignment assign_all(const std::vector<SparseVector>& points,
                      const std::vector<std::vector<double>>& centers) {
  Assignment a{std::vector<std::uint32_t>(points.size()), std::vector<double>(points.size())};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = nearest_center(centers, points[i]);
    a.cluster[i] = static_cast<std::uint32_t>(r);
    a.distance[i] = squared_distance_to_center(points[i], centers[r]);
  }
  return a;
}

std::vector<double> densify(const SparseVector& x, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (const auto& e : x.entries()) out[e.index - 1] = e.value;
  return out;
}

// Moves the point farthest from its own center into each empty cluster, taking
// only from clusters that keep at least one member. Returns true if anything
// moved.
bool repair_empty(Assignment& a, std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (const auto c : a.cluster) ++counts[c];
  bool moved = false;
  for (std::size_t r = 0; r < k; ++r) {
    if (counts[r] != 0) continue;
    std::size_t far = a.cluster.size();
    double far_dist = -1.0;
    for (std::size_t i = 0; i < a.cluster.size(); ++i) {
      if (counts[a.cluster[i]] > 1 && a.distance[i] > far_dist) {
        far_dist = a.distance[i];
        far = i;
      }
    }
    if (far == a.cluster.size()) throw std::logic_error("cannot repair empty cluster: k > points");
    --counts[a.cluster[far]];
    a.cluster[far] = static_cast<std::uint32_t>(r);
    a.distance[far] = 0.0;
    ++counts[r];
    moved = true;
  }
  return moved;
}

std::vector<std::vector<double>> kmeans_plus_plus(const std::vector<SparseVector>& points,
                                                  std::size_t k, std::size_t dim,
                                                  std::mt19937_64& rng) {
  std::vector<std::vector<double>> centers;
  centers.reserve(k);
  std::uniform_int_distribution<std::size_t> first(0, points.size() - 1);
  centers.push_back(densify(points[first(rng)], dim));

  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance_to_center(points[i], centers[0]);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centers.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);  // all points coincide with chosen centers
    }
    centers.push_back(densify(points[pick], dim));
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance_to_center(points[i], centers.back()));
    }
  }
  return centers;
}

}  // namespace

Partition kmeans_partition(const Dataset& data, std::size_t k, const KMeansOptions& options) {
  const std::size_t n = data.size();
  if (k == 0 || k > n) throw std::invalid_argument("kmeans_partition needs 1 <= k <= n");
  if (options.subsample_size < k) throw std::invalid_argument("kmeans subsample smaller than k");

  const auto sample_idx = subsample_indices(n, options.subsample_size, options.seed);
  std::vector<SparseVector> points;
  points.reserve(sample_idx.size());
  for (const auto i : sample_idx) points.push_back(data.samples[i]);

  const std::size_t dim = data.dim;
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  auto centers = kmeans_plus_plus(points, k, dim, rng);

  Assignment current;
  for (std::size_t iter = 0; iter < std::max<std::size_t>(options.max_iters, 1); ++iter) {
    auto next = assign_all(points, centers);
    repair_empty(next, k);
    const bool changed = iter == 0 || next.cluster != current.cluster;
    current = std::move(next);

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sums[current.cluster[i]];
      for (const auto& e : points[i].entries()) s[e.index - 1] += e.value;
      ++counts[current.cluster[i]];
    }
    for (std::size_t r = 0; r < k; ++r) {
      for (auto& v : sums[r]) v /= static_cast<double>(counts[r]);
    }
    centers = std::move(sums);
    if (!changed) break;
  }

  auto full = assign_all(data.samples, centers);
  repair_empty(full, k);
  auto partition = Partition::from_assignment(std::move(full.cluster), k);
  partition.centers = std::move(centers);
  return partition;
}

double block_diag_error(const Dataset& data, const KernelSpec& spec, const Partition& partition) {
  if (partition.size() != data.size()) throw std::invalid_argument("partition size != dataset size");
  const QMatrix q(data, spec);
  double off = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = i + 1; j < data.size(); ++j) {
      if (partition.assignment[i] == partition.assignment[j]) continue;
      const double v = q.entry(i, j);
      off += 2.0 * v * v;
    }
  }
  return off;
}

}  // namespace pbm
