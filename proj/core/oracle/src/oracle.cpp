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

#include "pbm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pbm::oracle {

namespace {

std::vector<double> densify(const SparseVector& x, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (const auto& e : x.entries()) out[e.index - 1] = e.value;
  return out;
}

double plain_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double kernel_from_dense(const KernelSpec& spec, const std::vector<double>& x, const std::vector<double>& z,
                         double xx, double zz) {
  const double xz = plain_dot(x, z);
  if (spec.kind == KernelKind::linear) return xz;
  return std::exp(-spec.gamma * std::max(0.0, xx + zz - 2.0 * xz));
}

// g'(u) on the open interval.
double g_slope(const LossSpec& loss, double u) {
  if (loss.kind == LossKind::hinge) return -1.0;
  return std::log(u / (loss.C - u));
}

// argmin_u a/2 u^2 + b u + g(u) on [lo, hi] with a > 0.
double scalar_min(const LossSpec& loss, double a, double b, double lo, double hi) {
  if (loss.kind == LossKind::hinge) return std::clamp((1.0 - b) / a, lo, hi);
  double l = std::max(lo, 0.0);
  double h = std::min(hi, loss.C);
  const auto slope = [&](double u) { return a * u + b + g_slope(loss, u); };
  if (l > 0.0 && slope(l) >= 0.0) return l;
  if (h < loss.C && slope(h) <= 0.0) return h;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (l + h);
    if (mid <= l || mid >= h) break;
    if (slope(mid) > 0.0) {
      h = mid;
    } else {
      l = mid;
    }
  }
  return 0.5 * (l + h);
}

// Power iteration bound on the largest eigenvalue of a PSD matrix.
double spectral_bound(const DenseMatrix& q) {
  const std::size_t n = q.n;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    auto w = dense_multiply(q, v);
    const double norm = std::sqrt(plain_dot(w, w));
    if (norm == 0.0) return 1.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    if (std::abs(norm - lambda) <= 1e-10 * norm) {
      lambda = norm;
      break;
    }
    lambda = norm;
  }
  double row_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(q(i, j));
    row_max = std::max(row_max, s);
  }
  // Power iteration can under-estimate; never go above the Gershgorin bound.
  return std::min(row_max, 1.05 * lambda + 1e-12);
}

// argmin_u (u - v)^2 / (2 s) + g(u) on the box.
double prox(const LossSpec& loss, double v, double s, double lo, double hi) {
  return scalar_min(loss, 1.0 / s, -v / s, lo, hi);
}

}  // namespace

double naive_kernel(const KernelSpec& spec, const SparseVector& x, const SparseVector& z) {
  const std::size_t dim = std::max<std::size_t>({x.max_index(), z.max_index(), 1});
  const auto xd = densify(x, dim);
  const auto zd = densify(z, dim);
  return kernel_from_dense(spec, xd, zd, plain_dot(xd, xd), plain_dot(zd, zd));
}

DenseMatrix dense_q(const Dataset& data, const KernelSpec& spec) {
  const std::size_t n = data.size();
  std::size_t dim = 1;
  for (const auto& x : data.samples) dim = std::max<std::size_t>(dim, x.max_index());
  std::vector<std::vector<double>> rows;
  std::vector<double> norms;
  rows.reserve(n);
  for (const auto& x : data.samples) {
    rows.push_back(densify(x, dim));
    norms.push_back(plain_dot(rows.back(), rows.back()));
  }
  DenseMatrix q{n, std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double k = i == j && spec.kind == KernelKind::gaussian
                           ? 1.0
                           : kernel_from_dense(spec, rows[i], rows[j], norms[i], norms[j]);
      q(i, j) = data.labels[i] * data.labels[j] * k;
    }
  }
  return q;
}

DenseProblem DenseProblem::dual(DenseMatrix q, const LossSpec& loss) {
  const std::size_t n = q.n;
  return {std::move(q), {}, loss, std::vector<double>(n, 0.0), std::vector<double>(n, loss.C)};
}

double dense_g(const LossSpec& loss, double u) {
  if (loss.kind == LossKind::hinge) return -u;
  double s = 0.0;
  if (u > 0.0) s += u * std::log(u);
  if (loss.C - u > 0.0) s += (loss.C - u) * std::log(loss.C - u);
  return s;
}

std::vector<double> dense_multiply(const DenseMatrix& q, std::span<const double> x) {
  std::vector<double> out(q.n, 0.0);
  for (std::size_t i = 0; i < q.n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.n; ++j) s += q(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

double dense_objective(const DenseProblem& p, std::span<const double> u) {
  const auto qu = dense_multiply(p.q, u);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += 0.5 * u[i] * qu[i] + dense_g(p.loss, u[i]);
    if (!p.linear.empty()) s += p.linear[i] * u[i];
  }
  return s;
}

std::vector<double> dense_residual(const DenseProblem& p, std::span<const double> u) {
  const auto qu = dense_multiply(p.q, u);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double qii = p.q(i, i);
    // Along coordinate i: qii/2 v^2 + (Qu_i - qii u_i + c_i) v + g(v).
    const double b = qu[i] - qii * u[i] + (p.linear.empty() ? 0.0 : p.linear[i]);
    out[i] = scalar_min(p.loss, qii, b, p.lower[i], p.upper[i]) - u[i];
  }
  return out;
}

double dense_residual_inf(const DenseProblem& p, std::span<const double> u) {
  double m = 0.0;
  for (const double v : dense_residual(p, u)) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> solve_dense(const DenseProblem& p, double tol, std::size_t max_iters) {
  const std::size_t n = p.size();
  const double step = 1.0 / spectral_bound(p.q);
  const auto c = [&](std::size_t i) { return p.linear.empty() ? 0.0 : p.linear[i]; };

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = p.loss.kind == LossKind::logistic ? 0.5 * (std::max(p.lower[i], 0.0) + std::min(p.upper[i], p.loss.C))
                                             : p.lower[i];
  }
  auto qx = dense_multiply(p.q, x);
  std::vector<double> y = x;
  std::vector<double> qy = qx;
  std::vector<double> x_new(n);
  double theta = 1.0;

  for (std::size_t it = 0; it < max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      x_new[i] = prox(p.loss, y[i] - step * (qy[i] + c(i)), step, p.lower[i], p.upper[i]);
    }
    const auto qx_new = dense_multiply(p.q, x_new);

    double restart_test = 0.0;
    for (std::size_t i = 0; i < n; ++i) restart_test += (y[i] - x_new[i]) * (x_new[i] - x[i]);
    const double theta_next = restart_test > 0.0 ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    const double momentum = restart_test > 0.0 ? 0.0 : (theta - 1.0) / theta_next;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = std::clamp(x_new[i] + momentum * (x_new[i] - x[i]), p.lower[i], p.upper[i]);
      qy[i] = qx_new[i] + momentum * (qx_new[i] - qx[i]);
    }
    if (momentum != 0.0) {
      // y was clipped; keep Qy exact.
      bool clipped = false;
      for (std::size_t i = 0; i < n && !clipped; ++i) {
        clipped = y[i] != x_new[i] + momentum * (x_new[i] - x[i]);
      }
      if (clipped) qy = dense_multiply(p.q, y);
    }
    theta = theta_next;
    x.swap(x_new);
    qx = qx_new;

    if (it % 10 == 9 && dense_residual_inf(p, x) <= tol / 10.0) return x;
  }
  throw std::runtime_error("solve_dense: no convergence within the iteration limit");
}

double grid_line_search(const std::function<double(double)>& f, double lo, double hi, std::size_t resolution) {
  if (resolution < 2 || !(lo <= hi)) throw std::invalid_argument("grid_line_search: bad grid");
  double best = lo;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < resolution; ++t) {
    const double beta = lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(resolution - 1);
    const double v = f(beta);
    if (v < best_value) {
      best_value = v;
      best = beta;
    }
  }
  return best;
}

std::vector<double> exact_subproblem(const DenseMatrix& q_block, std::span<const double> q_alpha,
                                     std::span<const double> alpha, std::span<const double> lower,
                                     std::span<const double> upper, const LossSpec& loss, double tol) {
  const std::size_t m = q_block.n;
  // With u = alpha + D the objective is 0.5 u'Qu + (q_alpha - Q alpha)'u + const.
  const auto qa = dense_multiply(q_block, alpha);
  DenseProblem p{q_block, std::vector<double>(m), loss, {lower.begin(), lower.end()}, {upper.begin(), upper.end()}};
  for (std::size_t i = 0; i < m; ++i) p.linear[i] = q_alpha[i] - qa[i];
  auto u = solve_dense(p, tol);
  for (std::size_t i = 0; i < m; ++i) u[i] -= alpha[i];
  return u;
}

double subproblem_value(const DenseMatrix& q_block, std::span<const double> q_alpha,
                        std::span<const double> alpha, const LossSpec& loss, std::span<const double> delta) {
  const auto qd = dense_multiply(q_block, delta);
  double s = 0.0;
  for (std::size_t i = 0; i < q_block.n; ++i) {
    s += 0.5 * delta[i] * qd[i] + dense_g(loss, alpha[i] + delta[i]) + q_alpha[i] * delta[i];
  }
  return s;
}

}  // namespace pbm::oracle
