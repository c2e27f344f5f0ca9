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

#include <algorithm>
#include <random>

#include "doctest.h"
#include "pbm/oracle.hpp"
#include "pbm/partition.hpp"
#include "synthetic.hpp"

using namespace pbm;

namespace {

std::vector<std::size_t> sorted_sizes(const Partition& p) {
  std::vector<std::size_t> s;
  for (const auto& b : p.blocks) s.push_back(b.size());
  std::sort(s.begin(), s.end());
  return s;
}

// Brute-force nearest center over dense coordinates.
std::size_t brute_nearest(const std::vector<std::vector<double>>& centers, const SparseVector& x) {
  std::size_t dim = x.max_index();
  for (const auto& c : centers) dim = std::max(dim, c.size());
  std::vector<double> dense(dim, 0.0);
  for (const auto& e : x.entries()) dense[e.index - 1] = e.value;
  std::size_t best = 0;
  double best_d = -1.0;
  for (std::size_t r = 0; r < centers.size(); ++r) {
    double d = 0.0;
    for (std::size_t f = 0; f < dim; ++f) {
      const double c = f < centers[r].size() ? centers[r][f] : 0.0;
      d += (dense[f] - c) * (dense[f] - c);
    }
    if (best_d < 0.0 || d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

Dataset separated_clouds(std::size_t n, std::uint64_t seed) {
  return testing::mixture(n, {{-10.0, 0.0}, {10.0, 0.0}}, 1.0, testing::LabelRule::split_in_cluster, seed);
}

}  // namespace

TEST_SUITE("partition") {
  TEST_CASE("random_partition: n=4, k=2 gives two blocks of 2") {
    const auto p = random_partition(4, 2, 1);
    CHECK_NOTHROW(p.validate());
    CHECK(sorted_sizes(p) == std::vector<std::size_t>{2, 2});
    CHECK_FALSE(p.centers.has_value());
  }

  TEST_CASE("random_partition: k=1 is the identity partition") {
    const auto p = random_partition(5, 1, 3);
    REQUIRE(p.blocks.size() == 1);
    CHECK(p.blocks[0] == std::vector<std::size_t>{0, 1, 2, 3, 4});
  }

  TEST_CASE("random_partition: n=100, k=7 sizes") {
    const auto p = random_partition(100, 7, 9);
    // Counting oracle: 100 = 2 * 15 + 5 * 14.
    CHECK(sorted_sizes(p) == std::vector<std::size_t>{14, 14, 14, 14, 14, 15, 15});
  }

  TEST_CASE("random_partition: determinism, seeds, and errors") {
    CHECK(random_partition(50, 4, 7) == random_partition(50, 4, 7));
    CHECK_FALSE(random_partition(50, 4, 7) == random_partition(50, 4, 8));
    CHECK_THROWS(random_partition(3, 4, 1));
    CHECK_THROWS(random_partition(3, 0, 1));
  }

  TEST_CASE("invariants hold for random constructor outputs") {
    for (std::size_t n = 1; n <= 40; n += 3) {
      for (std::size_t k = 1; k <= n; k += 2) {
        const auto p = random_partition(n, k, n * 31 + k);
        CHECK_NOTHROW(p.validate());
        const auto s = sorted_sizes(p);
        CHECK(s.front() >= n / k);
        CHECK(s.back() <= (n + k - 1) / k);
      }
    }
  }

  TEST_CASE("validate catches broken partitions") {
    auto p = random_partition(6, 2, 1);
    auto bad = p;
    bad.blocks[0].push_back(bad.blocks[1].front());
    CHECK_THROWS_AS(bad.validate(), std::logic_error);
    bad = p;
    bad.assignment[0] = 1 - bad.assignment[0];
    CHECK_THROWS_AS(bad.validate(), std::logic_error);
    CHECK_THROWS(Partition::from_assignment({0, 0, 0}, 2));  // block 1 empty
  }

  TEST_CASE("kmeans: well separated clouds are split exactly") {
    const auto data = separated_clouds(200, 4);
    const auto p = kmeans_partition(data, 2, {20000, 20, 5});
    CHECK_NOTHROW(p.validate());
    REQUIRE(p.centers.has_value());
    // Label oracle: cloud membership is the sign of feature 1.
    const auto cloud = [&](std::size_t i) { return data.samples[i].entries()[0].value > 0.0; };
    const auto first_block = p.assignment[0];
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK((p.assignment[i] == first_block) == (cloud(i) == cloud(0)));
    }
  }

  TEST_CASE("kmeans: k=1 gives one block whose center is the subsample mean") {
    const auto data = testing::random_sparse(60, 5, 0.5, 40);
    const KMeansOptions opt{25, 20, 3};
    const auto p = kmeans_partition(data, 1, opt);
    REQUIRE(p.centers.has_value());
    CHECK(p.blocks[0].size() == 60);
    const auto idx = subsample_indices(data.size(), opt.subsample_size, opt.seed);
    std::vector<double> mean(data.dim, 0.0);
    for (const auto i : idx) {
      for (const auto& e : data.samples[i].entries()) mean[e.index - 1] += e.value / static_cast<double>(idx.size());
    }
    const auto& c = (*p.centers)[0];
    for (std::size_t f = 0; f < mean.size(); ++f) {
      CHECK(c[f] == doctest::Approx(mean[f]).epsilon(1e-12));
    }
  }

  TEST_CASE("kmeans: deterministic for a fixed seed") {
    const auto data = testing::four_clusters(400, 8);
    CHECK(kmeans_partition(data, 4, {100, 20, 11}) == kmeans_partition(data, 4, {100, 20, 11}));
    CHECK_THROWS(kmeans_partition(data, 401, {}));
  }

  TEST_CASE("kmeans: every block stays non-empty with duplicated points") {
    // Three distinct locations but five clusters: repair must fill the gaps.
    Dataset d;
    for (int i = 0; i < 30; ++i) {
      d.samples.push_back(SparseVector{{1, static_cast<double>(i % 3)}});
      d.labels.push_back(i % 2 ? 1.0 : -1.0);
    }
    d.dim = 1;
    const auto p = kmeans_partition(d, 5, {30, 20, 2});
    CHECK_NOTHROW(p.validate());
    CHECK(p.blocks.size() == 5);
  }

  TEST_CASE("nearest_center examples") {
    Partition p = Partition::from_assignment({0, 1}, 2);
    p.centers = std::vector<std::vector<double>>{{0.0, 0.0}, {3.0, 4.0}};
    CHECK(nearest_center(p, SparseVector{{1, 3.0}, {2, 4.0}}) == 1);
    CHECK(nearest_center(p, SparseVector{{1, 1.5}, {2, 2.0}}) == 0);  // equidistant
    CHECK(nearest_center(p, SparseVector{}) == 0);
    Partition no_centers = Partition::from_assignment({0, 1}, 2);
    CHECK_THROWS_AS(nearest_center(no_centers, SparseVector{}), std::logic_error);
  }

  TEST_CASE("nearest_center matches an exhaustive scan") {
    const auto data = testing::four_clusters(300, 12);
    const auto p = kmeans_partition(data, 6, {300, 20, 3});
    const auto probes = testing::random_sparse(200, 3, 0.8, 13);
    for (const auto& x : probes.samples) CHECK(nearest_center(p, x) == brute_nearest(*p.centers, x));
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(p.assignment[i] == brute_nearest(*p.centers, data.samples[i]));
    }
  }

  TEST_CASE("squared_distance_to_center handles sparse/dense length mismatch") {
    const SparseVector x{{1, 1.0}, {4, 2.0}};
    CHECK(squared_distance_to_center(x, {1.0, 1.0}) == doctest::Approx(1.0 + 4.0));
    CHECK(squared_distance_to_center(x, {0.0, 0.0, 0.0, 0.0, 3.0}) == doctest::Approx(1.0 + 4.0 + 9.0));
  }

  TEST_CASE("block_diag_error examples") {
    const auto data = testing::random_sparse(12, 4, 0.5, 41);
    const auto spec = KernelSpec::gaussian(0.5);
    CHECK(block_diag_error(data, spec, random_partition(12, 1, 1)) == 0.0);

    const auto two = testing::random_sparse(2, 3, 0.7, 42);
    const auto p = Partition::from_assignment({0, 1}, 2);
    const double q12 = two.labels[0] * two.labels[1] * kernel_eval(spec, two.samples[0], two.samples[1]);
    CHECK(block_diag_error(two, spec, p) == doctest::Approx(2.0 * q12 * q12).epsilon(1e-12));
  }

  TEST_CASE("block_diag_error equals the dense Frobenius error (n=50, k=5)") {
    const auto data = testing::random_sparse(50, 6, 0.4, 43);
    const auto spec = KernelSpec::gaussian(0.3);
    const auto p = random_partition(50, 5, 44);
    const auto q = oracle::dense_q(data, spec);
    double expected = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
      for (std::size_t j = 0; j < 50; ++j) {
        const double qbar = p.assignment[i] == p.assignment[j] ? q(i, j) : 0.0;
        expected += (qbar - q(i, j)) * (qbar - q(i, j));
      }
    }
    CHECK(block_diag_error(data, spec, p) == doctest::Approx(expected).epsilon(1e-9));
  }

  TEST_CASE("kmeans beats random on block_diag_error for separated clouds") {
    const auto data = separated_clouds(200, 45);
    const auto spec = KernelSpec::gaussian(0.5);
    const auto km = kmeans_partition(data, 2, {20000, 20, 1});
    const auto rnd = random_partition(data.size(), 2, 1);
    CHECK(block_diag_error(data, spec, km) < block_diag_error(data, spec, rnd));
  }

  TEST_CASE("JSON round trip keeps assignment and centers") {
    const auto data = testing::four_clusters(80, 46);
    const auto p = kmeans_partition(data, 4, {80, 20, 1});
    CHECK(Partition::from_json(p.to_json()) == p);
    const auto r = random_partition(10, 3, 2);
    CHECK(Partition::from_json(r.to_json()) == r);
  }
}
