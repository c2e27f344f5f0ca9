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

#include <benchmark/benchmark.h>

#include <random>

#include "pbm/comm.hpp"
#include "pbm/kernel.hpp"
#include "pbm/local_solver.hpp"
#include "pbm/partition.hpp"
#include "pbm/train.hpp"
#include "synthetic.hpp"

namespace {

void BM_KernelColumn(benchmark::State& state) {
  const auto data = pbm::testing::random_sparse(static_cast<std::size_t>(state.range(0)), 50, 0.2, 1);
  const pbm::QMatrix q(data, pbm::KernelSpec::gaussian(0.5));
  std::vector<double> col(data.size());
  std::size_t j = 0;
  for (auto _ : state) {
    q.column(j, col);
    j = (j + 1) % data.size();
    benchmark::DoNotOptimize(col.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KernelColumn)->Arg(1000)->Arg(10000);

void BM_CacheHit(benchmark::State& state) {
  const auto data = pbm::testing::random_sparse(2000, 20, 0.3, 2);
  const pbm::QMatrix q(data, pbm::KernelSpec::gaussian(0.5));
  pbm::KernelCache cache(q);
  for (std::size_t j = 0; j < 64; ++j) (void)cache.column(j);
  std::size_t j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cache.column(j));
    j = (j + 1) % 64;
  }
}
BENCHMARK(BM_CacheHit);

void BM_SolveBlock(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto data = pbm::testing::two_clusters(m, 3);
  const pbm::QMatrix q(data, pbm::KernelSpec::gaussian(1.0));
  std::vector<std::size_t> block(m);
  for (std::size_t i = 0; i < m; ++i) block[i] = i;
  const auto h = pbm::BlockHessian::materialize(q, block);
  const std::vector<double> zero(m, 0.0);
  const std::vector<double> upper(m, 1.0);
  const pbm::Subproblem sub{&h, zero, zero, zero, upper, {pbm::LossKind::hinge, 1.0}};
  const auto strategy = static_cast<pbm::InnerStrategy>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pbm::solve_block(sub, strategy, pbm::InnerBudget::epochs(1), 7));
  }
}
BENCHMARK(BM_SolveBlock)->ArgsProduct({{200, 1000}, {0, 1, 2}});

void BM_KMeans(benchmark::State& state) {
  const auto data = pbm::testing::four_clusters(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(pbm::kmeans_partition(data, 8));
}
BENCHMARK(BM_KMeans)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Train(benchmark::State& state) {
  const auto data = pbm::testing::four_clusters(2000, 5);
  pbm::TrainConfig c;
  c.kernel = pbm::KernelSpec::gaussian(1.0);
  c.workers = static_cast<std::size_t>(state.range(0));
  c.outer_tol = 1e-3;
  c.record_time = false;
  for (auto _ : state) benchmark::DoNotOptimize(pbm::train(c, data));
}
BENCHMARK(BM_Train)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
