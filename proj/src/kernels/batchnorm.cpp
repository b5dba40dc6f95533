// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "stssl/kernels.hpp"

namespace stssl::kernels {

void batchnorm_forward(const NormLayout& l, std::span<const float> x, std::span<const float> gamma,
                       std::span<const float> beta, double eps, std::span<float> x_hat, std::span<double> mean,
                       std::span<double> inv_std, std::span<float> y) {
  const auto count = static_cast<double>(l.batch * l.inner);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < l.channels; ++c) {
    double sum = 0.0;
    for (std::int64_t b = 0; b < l.batch; ++b) {
      const float* p = x.data() + (b * l.channels + c) * l.inner;
      for (std::int64_t i = 0; i < l.inner; ++i) sum += p[i];
    }
    const double mu = sum / count;
    double sq = 0.0;
    for (std::int64_t b = 0; b < l.batch; ++b) {
      const float* p = x.data() + (b * l.channels + c) * l.inner;
      for (std::int64_t i = 0; i < l.inner; ++i) {
        const double d = p[i] - mu;
        sq += d * d;
      }
    }
    const double istd = 1.0 / std::sqrt(sq / count + eps);
    mean[static_cast<std::size_t>(c)] = mu;
    inv_std[static_cast<std::size_t>(c)] = istd;
    const double gv = gamma[static_cast<std::size_t>(c)];
    const double bv = beta[static_cast<std::size_t>(c)];
    for (std::int64_t b = 0; b < l.batch; ++b) {
      const auto off = (b * l.channels + c) * l.inner;
      for (std::int64_t i = 0; i < l.inner; ++i) {
        const double xh = (x[static_cast<std::size_t>(off + i)] - mu) * istd;
        x_hat[static_cast<std::size_t>(off + i)] = static_cast<float>(xh);
        y[static_cast<std::size_t>(off + i)] = static_cast<float>(gv * xh + bv);
      }
    }
  }
}

void batchnorm_backward(const NormLayout& l, std::span<const float> grad_y, std::span<const float> x_hat,
                        std::span<const float> gamma, std::span<const double> inv_std, std::span<float> grad_x,
                        std::span<float> grad_gamma, std::span<float> grad_beta) {
  const auto count = static_cast<double>(l.batch * l.inner);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < l.channels; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::int64_t b = 0; b < l.batch; ++b) {
      const auto off = (b * l.channels + c) * l.inner;
      for (std::int64_t i = 0; i < l.inner; ++i) {
        const double dy = grad_y[static_cast<std::size_t>(off + i)];
        sum_dy += dy;
        sum_dy_xh += dy * x_hat[static_cast<std::size_t>(off + i)];
      }
    }
    if (!grad_gamma.empty()) grad_gamma[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy_xh);
    if (!grad_beta.empty()) grad_beta[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy);
    if (grad_x.empty()) continue;
    const double scale = gamma[static_cast<std::size_t>(c)] * inv_std[static_cast<std::size_t>(c)];
    const double mean_dy = sum_dy / count;
    const double mean_dy_xh = sum_dy_xh / count;
    for (std::int64_t b = 0; b < l.batch; ++b) {
      const auto off = (b * l.channels + c) * l.inner;
      for (std::int64_t i = 0; i < l.inner; ++i) {
        const auto k = static_cast<std::size_t>(off + i);
        grad_x[k] += static_cast<float>(scale * (grad_y[k] - mean_dy - x_hat[k] * mean_dy_xh));
      }
    }
  }
}

}  // namespace stssl::kernels
