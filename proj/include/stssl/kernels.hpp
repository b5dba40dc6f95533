// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

namespace stssl::kernels {

/// Geometry of a 3D convolution over NCTHW tensors with a cubic stride and
/// symmetric zero padding.
struct Conv3dGeometry {
  std::int64_t batch = 1;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t in_t = 1, in_h = 1, in_w = 1;
  std::int64_t k_t = 1, k_h = 1, k_w = 1;
  std::int64_t stride = 1;
  std::int64_t pad_t = 0, pad_h = 0, pad_w = 0;

  std::int64_t out_t() const { return (in_t + 2 * pad_t - k_t) / stride + 1; }
  std::int64_t out_h() const { return (in_h + 2 * pad_h - k_h) / stride + 1; }
  std::int64_t out_w() const { return (in_w + 2 * pad_w - k_w) / stride + 1; }
  std::int64_t input_size() const { return batch * in_channels * in_t * in_h * in_w; }
  std::int64_t output_size() const { return batch * out_channels * out_t() * out_h() * out_w(); }
  std::int64_t weight_size() const { return out_channels * in_channels * k_t * k_h * k_w; }
};

/// "Same" padding (k - 1) / 2 on every axis.
Conv3dGeometry make_conv3d(std::int64_t batch, std::int64_t in_channels, std::int64_t out_channels, std::int64_t t,
                           std::int64_t h, std::int64_t w, std::int64_t kernel, std::int64_t stride);

// OpenMP kernels. Work is split over output planes so every element is
// written by exactly one thread; results do not depend on the thread count.

/// output = conv(input, weight) + bias. `bias` may be empty.
void conv3d_forward(const Conv3dGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output);
/// grad_input = conv^T(grad_output, weight); overwrites grad_input.
void conv3d_backward_input(const Conv3dGeometry& g, std::span<const float> grad_output, std::span<const float> weight,
                           std::span<float> grad_input);
/// Overwrites grad_weight and, when nonempty, grad_bias.
void conv3d_backward_weight(const Conv3dGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                            std::span<float> grad_weight, std::span<float> grad_bias);

namespace reference {

// Serial direct loops with double accumulation. Kept for tests and the
// benchmark baseline.
void conv3d_forward(const Conv3dGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output);
void conv3d_backward_input(const Conv3dGeometry& g, std::span<const float> grad_output, std::span<const float> weight,
                           std::span<float> grad_input);
void conv3d_backward_weight(const Conv3dGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                            std::span<float> grad_weight, std::span<float> grad_bias);

}  // namespace reference

/// Per-channel normalization statistics for an N x C x S tensor (S = product
/// of the trailing extents, 1 for rank-2 inputs).
struct NormLayout {
  std::int64_t batch = 1;
  std::int64_t channels = 1;
  std::int64_t inner = 1;
};

/// Normalizes with biased batch variance. Fills mean and inv_std (per
/// channel) and the normalized activations x_hat.
void batchnorm_forward(const NormLayout& l, std::span<const float> x, std::span<const float> gamma,
                       std::span<const float> beta, double eps, std::span<float> x_hat, std::span<double> mean,
                       std::span<double> inv_std, std::span<float> y);
/// Accumulates into grad_x, grad_gamma, grad_beta (any may be empty to skip).
void batchnorm_backward(const NormLayout& l, std::span<const float> grad_y, std::span<const float> x_hat,
                        std::span<const float> gamma, std::span<const double> inv_std, std::span<float> grad_x,
                        std::span<float> grad_gamma, std::span<float> grad_beta);

}  // namespace stssl::kernels
