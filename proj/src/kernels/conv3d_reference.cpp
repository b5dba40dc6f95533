// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "stssl/errors.hpp"
#include "stssl/kernels.hpp"

namespace stssl::kernels::reference {

namespace {

struct Index {
  const Conv3dGeometry& g;
  std::int64_t in(std::int64_t b, std::int64_t c, std::int64_t t, std::int64_t h, std::int64_t w) const {
    return (((b * g.in_channels + c) * g.in_t + t) * g.in_h + h) * g.in_w + w;
  }
  std::int64_t out(std::int64_t b, std::int64_t c, std::int64_t t, std::int64_t h, std::int64_t w) const {
    return (((b * g.out_channels + c) * g.out_t() + t) * g.out_h() + h) * g.out_w() + w;
  }
  std::int64_t weight(std::int64_t co, std::int64_t ci, std::int64_t t, std::int64_t h, std::int64_t w) const {
    return (((co * g.in_channels + ci) * g.k_t + t) * g.k_h + h) * g.k_w + w;
  }
};

// Visits every (output, input, weight) index triple of the convolution.
template <typename F>
void for_each_tap(const Conv3dGeometry& g, F&& f) {
  const Index ix{g};
  for (std::int64_t b = 0; b < g.batch; ++b)
    for (std::int64_t co = 0; co < g.out_channels; ++co)
      for (std::int64_t ot = 0; ot < g.out_t(); ++ot)
        for (std::int64_t oh = 0; oh < g.out_h(); ++oh)
          for (std::int64_t ow = 0; ow < g.out_w(); ++ow)
            for (std::int64_t ci = 0; ci < g.in_channels; ++ci)
              for (std::int64_t kt = 0; kt < g.k_t; ++kt)
                for (std::int64_t kh = 0; kh < g.k_h; ++kh)
                  for (std::int64_t kw = 0; kw < g.k_w; ++kw) {
                    const auto it = ot * g.stride + kt - g.pad_t;
                    const auto ih = oh * g.stride + kh - g.pad_h;
                    const auto iw = ow * g.stride + kw - g.pad_w;
                    if (it < 0 || it >= g.in_t || ih < 0 || ih >= g.in_h || iw < 0 || iw >= g.in_w) continue;
                    f(ix.out(b, co, ot, oh, ow), ix.in(b, ci, it, ih, iw), ix.weight(co, ci, kt, kh, kw), co);
                  }
}

}  // namespace

void conv3d_forward(const Conv3dGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output) {
  if (static_cast<std::int64_t>(output.size()) != g.output_size()) throw UsageError("conv3d output size mismatch");
  std::vector<double> acc(output.size(), 0.0);
  for_each_tap(g, [&](std::int64_t o, std::int64_t i, std::int64_t w, std::int64_t) {
    acc[static_cast<std::size_t>(o)] += static_cast<double>(input[static_cast<std::size_t>(i)]) * weight[static_cast<std::size_t>(w)];
  });
  const Index ix{g};
  for (std::int64_t b = 0; b < g.batch; ++b)
    for (std::int64_t co = 0; co < g.out_channels; ++co)
      for (std::int64_t ot = 0; ot < g.out_t(); ++ot)
        for (std::int64_t oh = 0; oh < g.out_h(); ++oh)
          for (std::int64_t ow = 0; ow < g.out_w(); ++ow) {
            const auto o = static_cast<std::size_t>(ix.out(b, co, ot, oh, ow));
            output[o] = static_cast<float>(acc[o] + (bias.empty() ? 0.0 : bias[static_cast<std::size_t>(co)]));
          }
}

void conv3d_backward_input(const Conv3dGeometry& g, std::span<const float> grad_output, std::span<const float> weight,
                           std::span<float> grad_input) {
  std::vector<double> acc(grad_input.size(), 0.0);
  for_each_tap(g, [&](std::int64_t o, std::int64_t i, std::int64_t w, std::int64_t) {
    acc[static_cast<std::size_t>(i)] += static_cast<double>(grad_output[static_cast<std::size_t>(o)]) * weight[static_cast<std::size_t>(w)];
  });
  for (std::size_t i = 0; i < acc.size(); ++i) grad_input[i] = static_cast<float>(acc[i]);
}

void conv3d_backward_weight(const Conv3dGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                            std::span<float> grad_weight, std::span<float> grad_bias) {
  std::vector<double> acc(grad_weight.size(), 0.0);
  for_each_tap(g, [&](std::int64_t o, std::int64_t i, std::int64_t w, std::int64_t) {
    acc[static_cast<std::size_t>(w)] += static_cast<double>(grad_output[static_cast<std::size_t>(o)]) * input[static_cast<std::size_t>(i)];
  });
  for (std::size_t i = 0; i < acc.size(); ++i) grad_weight[i] = static_cast<float>(acc[i]);
  if (!grad_bias.empty()) {
    const auto plane = g.out_t() * g.out_h() * g.out_w();
    for (std::int64_t co = 0; co < g.out_channels; ++co) {
      double sum = 0.0;
      for (std::int64_t b = 0; b < g.batch; ++b)
        for (std::int64_t i = 0; i < plane; ++i)
          sum += grad_output[static_cast<std::size_t>((b * g.out_channels + co) * plane + i)];
      grad_bias[static_cast<std::size_t>(co)] = static_cast<float>(sum);
    }
  }
}

}  // namespace stssl::kernels::reference
