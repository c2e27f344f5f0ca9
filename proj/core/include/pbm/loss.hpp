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
#include <limits>
#include <string>
#include <vector>

namespace pbm {

enum class LossKind { hinge, logistic };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/// Loss of the primal ERM problem; determines the dual terms g_i and the box.
struct LossSpec {
  LossKind kind = LossKind::hinge;
  double C = 1.0;

  void validate() const;
  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

/// Per-coordinate box a <= alpha <= b.
struct BoxBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  /// [0, C] for every coordinate, for both supported losses.
  static BoxBounds for_loss(const LossSpec& loss, std::size_t n);

  [[nodiscard]] std::size_t size() const noexcept { return lower.size(); }
  void validate() const;
};

/// Value returned by g_value outside [0, C]. Finite so sums saturate instead of
/// producing inf - inf; feasible iterates never reach it.
inline constexpr double kOutsideBox = std::numeric_limits<double>::max();

/// Dual term g(alpha):
///   hinge:    -alpha
///   logistic: alpha log alpha + (C - alpha) log(C - alpha), with 0 log 0 = 0.
double g_value(const LossSpec& loss, double alpha);

/// g'(alpha). Logistic evaluates at alpha clamped to [eps, C - eps] with
/// eps = 1e-12 C, which keeps the derivative finite on the boundary.
double g_derivative(const LossSpec& loss, double alpha);

/// Interior margin used for logistic iterates.
double logistic_margin(const LossSpec& loss);

/// Minimizer delta of
///     0.5 q_ii delta^2 + linear_coef delta + g(current + delta)
/// subject to lower <= current + delta <= upper. Throws std::invalid_argument
/// when q_ii <= 0.
double one_var_min(const LossSpec& loss, double q_ii, double linear_coef, double current,
                   double lower, double upper);

}  // namespace pbm
