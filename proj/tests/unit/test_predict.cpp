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

#include <cmath>
#include <random>

#include "doctest.h"
#include "pbm/oracle.hpp"
#include "pbm/predict.hpp"
#include "pbm/train.hpp"
#include "synthetic.hpp"

using namespace pbm;

namespace {

const LossSpec kHinge{LossKind::hinge, 1.0};

Dataset line_data(std::vector<double> xs, std::vector<double> ys) {
  Dataset d;
  for (const double x : xs) d.samples.push_back(SparseVector{{1, x}});
  d.labels = std::move(ys);
  d.dim = 1;
  return d;
}

}  // namespace

TEST_SUITE("predict") {
  TEST_CASE("empty support set gives 0 and predicts +1") {
    const auto data = line_data({1.0, 2.0}, {1.0, -1.0});
    const auto m = build_model(data, kHinge, KernelSpec::gaussian(1.0), std::vector<double>{0.0, 0.0});
    CHECK(m.support.size() == 0);
    CHECK(decision_value(m, SparseVector{{1, 3.0}}) == 0.0);
    CHECK(predict(m, SparseVector{{1, 3.0}}) == 1.0);
  }

  TEST_CASE("single support vector evaluated at itself gives 1") {
    const auto data = line_data({1.0, 2.0}, {1.0, -1.0});
    const auto m = build_model(data, kHinge, KernelSpec::gaussian(1.0), std::vector<double>{1.0, 0.0});
    CHECK(m.support.size() == 1);
    CHECK(m.indices == std::vector<std::size_t>{0});
    CHECK(decision_value(m, data.samples[0]) == 1.0);
  }

  TEST_CASE("decision values match a dense sum over all training points") {
    const auto data = testing::random_sparse(60, 6, 0.5, 41);
    const auto test = testing::random_sparse(25, 6, 0.5, 42);
    const auto spec = KernelSpec::gaussian(0.4);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> alpha(60);
    for (auto& a : alpha) a = unit(rng) < 0.4 ? 0.0 : unit(rng);
    const auto m = build_model(data, kHinge, spec, alpha);
    for (const double c : m.support.coef) CHECK(c > 0.0);
    for (const auto& x : test.samples) {
      double expected = 0.0;
      for (std::size_t i = 0; i < 60; ++i) {
        expected += alpha[i] * data.labels[i] * oracle::naive_kernel(spec, data.samples[i], x);
      }
      CHECK(std::abs(decision_value(m, x) - expected) <= 1e-7);
    }
  }

  TEST_CASE("local prediction with a zero direction equals global prediction") {
    const auto data = testing::four_clusters(120, 43);
    const auto test = testing::four_clusters(60, 44);
    auto p = kmeans_partition(data, 4, {1000, 20, 1});
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> alpha(120);
    for (auto& a : alpha) a = unit(rng);
    const std::vector<double> zero(120, 0.0);
    const auto m = build_model(data, kHinge, KernelSpec::gaussian(0.5), alpha, &p, alpha, zero);
    REQUIRE(m.local.has_value());
    for (const auto& x : test.samples) {
      CHECK(local_decision_value(m, x) == doctest::Approx(decision_value(m, x)).epsilon(1e-12));
      CHECK(predict_local(m, x) == predict(m, x));
    }
  }

  TEST_CASE("hand-built instance where local and global labels differ") {
    // Two one-point clusters. Global alpha keeps only the negative point; the
    // local model for cluster 0 uses the direction on the positive point.
    const auto data = line_data({1.0, 1.5}, {1.0, -1.0});
    auto p = Partition::from_assignment({0, 1}, 2);
    p.centers = std::vector<std::vector<double>>{{1.0}, {1.5}};
    const auto spec = KernelSpec::gaussian(1.0);
    const std::vector<double> alpha{0.0, 1.0};
    const std::vector<double> base{0.0, 0.0};
    const std::vector<double> d{1.0, 1.0};
    const auto m = build_model(data, kHinge, spec, alpha, &p, base, d);
    const SparseVector x{{1, 1.1}};
    const double global = -kernel_eval(spec, data.samples[1], x);
    const double local = kernel_eval(spec, data.samples[0], x);
    CHECK(decision_value(m, x) == doctest::Approx(global));
    CHECK(local_decision_value(m, x) == doctest::Approx(local));
    CHECK(predict(m, x) == -1.0);
    CHECK(predict_local(m, x) == 1.0);
  }

  TEST_CASE("local prediction without centers is an error") {
    const auto data = line_data({1.0, 2.0}, {1.0, -1.0});
    const auto m = build_model(data, kHinge, KernelSpec::gaussian(1.0), std::vector<double>{1.0, 1.0});
    CHECK_FALSE(m.local.has_value());
    CHECK_THROWS_AS((void)local_decision_value(m, data.samples[0]), std::logic_error);
    CHECK_THROWS_AS((void)predict_all(m, data, PredictMode::local), std::logic_error);
  }

  TEST_CASE("accuracy examples") {
    const auto data = line_data({-1.0, 1.0, -1.2, 1.2}, {-1.0, 1.0, -1.0, 1.0});
    const auto spec = KernelSpec::gaussian(1.0);
    const auto perfect = build_model(data, kHinge, spec, std::vector<double>{1.0, 1.0, 0.0, 0.0});
    CHECK(accuracy(perfect, data, PredictMode::global) == 1.0);
    const auto constant = build_model(data, kHinge, spec, std::vector<double>(4, 0.0));
    CHECK(accuracy(constant, data, PredictMode::global) == 0.5);
  }

  TEST_CASE("predict_all and accuracy match a per-sample loop") {
    const auto data = testing::two_clusters(80, 45);
    const auto test = testing::two_clusters(200, 46);
    TrainConfig c;
    c.loss = kHinge;
    c.kernel = KernelSpec::gaussian(1.0);
    c.workers = 2;
    c.record_time = false;
    const auto r = train(c, data);
    std::size_t correct = 0;
    const auto labels = predict_all(r.model, test, PredictMode::global, 3);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const double y = decision_value(r.model, test.samples[i]) >= 0.0 ? 1.0 : -1.0;
      CHECK(labels[i] == y);
      if (y == test.labels[i]) ++correct;
    }
    CHECK(accuracy(r.model, test, PredictMode::global) ==
          static_cast<double>(correct) / static_cast<double>(test.size()));
  }

  TEST_CASE("after one exact iteration from zero, local prediction equals per-cluster SVMs") {
    const auto data = testing::four_clusters(160, 47);
    const auto test = testing::four_clusters(80, 48);
    TrainConfig c;
    c.loss = kHinge;
    c.kernel = KernelSpec::gaussian(0.5);
    c.workers = 4;
    c.max_outer_iters = 1;
    c.inner_budget = InnerBudget::unlimited(0.0);
    c.inner_tol = 1e-12;
    c.record_time = false;
    const auto r = train(c, data);
    REQUIRE(r.model.local.has_value());
    for (std::size_t b = 0; b < 4; ++b) {
      const auto rows = select_rows(data, r.partition.blocks[b]);
      const auto p = oracle::DenseProblem::dual(oracle::dense_q(rows, c.kernel), c.loss);
      const auto a = oracle::solve_dense(p, 1e-12);
      for (const auto& x : test.samples) {
        if (nearest_center(r.partition, x) != b) continue;
        double v = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) v += a[i] * rows.labels[i] * oracle::naive_kernel(c.kernel, rows.samples[i], x);
        CHECK(predict_local(r.model, x) == sign_label(v));
      }
    }
  }

  TEST_CASE("model JSON and file round-trips") {
    const auto data = testing::four_clusters(100, 49);
    TrainConfig c;
    c.loss = {LossKind::logistic, 2.0};
    c.kernel = KernelSpec::gaussian(0.3);
    c.workers = 4;
    c.max_outer_iters = 5;
    c.record_time = false;
    const auto r = train(c, data);
    REQUIRE(r.model.local.has_value());
    const auto text = model_to_json(r.model);
    const auto back = model_from_json(text);
    CHECK(back == r.model);
    CHECK(model_to_json(back) == text);
    const auto dir = testing::scratch_dir("predict_roundtrip");
    save_model(r.model, dir / "m.json");
    CHECK(load_model(dir / "m.json") == r.model);
    CHECK_THROWS_AS(load_model(dir / "missing.json"), std::ios_base::failure);
    CHECK_THROWS(model_from_json("{\"format\": \"other\"}"));
  }

  TEST_CASE("mode names") {
    CHECK(predict_mode_from_string("local") == PredictMode::local);
    CHECK(to_string(PredictMode::global) == "global");
    CHECK_THROWS(predict_mode_from_string("nearest"));
  }
}
