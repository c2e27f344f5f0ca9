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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbm/data.hpp"
#include "pbm/kernel.hpp"
#include "pbm/loss.hpp"
#include "pbm/partition.hpp"

namespace pbm {

/// Sparse dual vector over the model's vector pool: sum_s coef[s] y K(x_s, .).
struct Expansion {
  std::vector<std::size_t> slots;
  std::vector<double> coef;

  [[nodiscard]] std::size_t size() const noexcept { return slots.size(); }
  friend bool operator==(const Expansion&, const Expansion&) = default;
};

/// Data for cluster-wise prediction with alpha_t + (d_t)_<S_r>.
struct LocalModel {
  std::vector<std::vector<double>> centers;
  Expansion base;                   ///< alpha_t, the iterate before the last step
  std::vector<Expansion> directions;  ///< (d_t)_<S_r>, one per block

  friend bool operator==(const LocalModel&, const LocalModel&) = default;
};

struct Model {
  LossSpec loss;
  KernelSpec kernel;
  LabelMap label_map;

  /// Training vectors referenced by any expansion, ordered by training index.
  std::vector<std::size_t> indices;
  std::vector<SparseVector> vectors;
  std::vector<double> labels;

  Expansion support;  ///< final alpha; every stored coefficient is > 0
  std::optional<LocalModel> local;

  void validate() const;
  friend bool operator==(const Model&, const Model&) = default;
};

/// Assembles a model from a full dual vector. `local_base` / `local_direction`
/// are alpha_t and d_t of the last iteration; local data is attached only when
/// the partition carries kmeans centers.
Model build_model(const Dataset& data, const LossSpec& loss, const KernelSpec& kernel,
                  std::span<const double> alpha, const Partition* partition = nullptr,
                  std::span<const double> local_base = {}, std::span<const double> local_direction = {});

double decision_value(const Model& model, const Expansion& expansion, const SparseVector& x);

/// sum_{i in SV} alpha_i y_i K(x_i, x).
double decision_value(const Model& model, const SparseVector& x);

/// Label in {-1,+1}; a decision value of exactly 0 maps to +1.
inline double sign_label(double decision) { return decision >= 0.0 ? 1.0 : -1.0; }

double predict(const Model& model, const SparseVector& x);

/// Decision value with alpha_t + (d_t)_<S_r>, r the nearest center. Throws
/// std::logic_error if the model has no local data.
double local_decision_value(const Model& model, const SparseVector& x);
double predict_local(const Model& model, const SparseVector& x);

enum class PredictMode { global, local };

std::string to_string(PredictMode mode);
PredictMode predict_mode_from_string(const std::string& name);

/// Predicted labels (+1/-1) for every row of `data`, evaluated in parallel.
std::vector<double> predict_all(const Model& model, const Dataset& data, PredictMode mode,
                                std::size_t threads = 0);

/// Fraction of rows whose predicted label equals the true one.
double accuracy(const Model& model, const Dataset& test, PredictMode mode, std::size_t threads = 0);

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace pbm
