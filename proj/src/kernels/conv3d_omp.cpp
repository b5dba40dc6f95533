// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstring>

#include "stssl/errors.hpp"
#include "stssl/kernels.hpp"

namespace stssl::kernels {

namespace {

// Range of output columns whose tap `k` lands inside [0, in_extent).
struct Range {
  std::int64_t lo, hi;  // half-open
};

Range valid_outputs(std::int64_t out_extent, std::int64_t in_extent, std::int64_t k, std::int64_t pad,
                    std::int64_t stride) {
  // o * stride + k - pad in [0, in_extent)
  std::int64_t lo = pad - k;
  lo = lo <= 0 ? 0 : (lo + stride - 1) / stride;
  std::int64_t hi_num = in_extent - 1 + pad - k;
  std::int64_t hi = hi_num < 0 ? -1 : hi_num / stride;
  return {lo, std::min(out_extent, hi + 1)};
}

void check_sizes(const Conv3dGeometry& g, std::size_t in, std::size_t w, std::size_t out) {
  if (static_cast<std::int64_t>(in) != g.input_size() || static_cast<std::int64_t>(w) != g.weight_size() ||
      static_cast<std::int64_t>(out) != g.output_size()) {
    throw UsageError("conv3d buffer sizes do not match geometry");
  }
}

}  // namespace

Conv3dGeometry make_conv3d(std::int64_t batch, std::int64_t in_channels, std::int64_t out_channels, std::int64_t t,
                           std::int64_t h, std::int64_t w, std::int64_t kernel, std::int64_t stride) {
  Conv3dGeometry g;
  g.batch = batch;
  g.in_channels = in_channels;
  g.out_channels = out_channels;
  g.in_t = t;
  g.in_h = h;
  g.in_w = w;
  g.k_t = g.k_h = g.k_w = kernel;
  g.stride = stride;
  g.pad_t = g.pad_h = g.pad_w = (kernel - 1) / 2;
  return g;
}

void conv3d_forward(const Conv3dGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output) {
  check_sizes(g, input.size(), weight.size(), output.size());
  const auto ot_n = g.out_t(), oh_n = g.out_h(), ow_n = g.out_w();
  const auto out_plane = ot_n * oh_n * ow_n;
  const auto in_plane = g.in_t * g.in_h * g.in_w;
  const auto ksize = g.k_t * g.k_h * g.k_w;
  const auto s = g.stride;

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t b = 0; b < g.batch; ++b) {
    for (std::int64_t co = 0; co < g.out_channels; ++co) {
      float* out = output.data() + (b * g.out_channels + co) * out_plane;
      std::fill(out, out + out_plane, bias.empty() ? 0.0f : bias[static_cast<std::size_t>(co)]);
      for (std::int64_t ci = 0; ci < g.in_channels; ++ci) {
        const float* in = input.data() + (b * g.in_channels + ci) * in_plane;
        const float* wk = weight.data() + (co * g.in_channels + ci) * ksize;
        for (std::int64_t kt = 0; kt < g.k_t; ++kt) {
          const auto rt = valid_outputs(ot_n, g.in_t, kt, g.pad_t, s);
          for (std::int64_t kh = 0; kh < g.k_h; ++kh) {
            const auto rh = valid_outputs(oh_n, g.in_h, kh, g.pad_h, s);
            for (std::int64_t kw = 0; kw < g.k_w; ++kw) {
              const auto rw = valid_outputs(ow_n, g.in_w, kw, g.pad_w, s);
              const float wv = wk[(kt * g.k_h + kh) * g.k_w + kw];
              const auto shift = kw - g.pad_w;
              for (std::int64_t ot = rt.lo; ot < rt.hi; ++ot) {
                const auto it = ot * s + kt - g.pad_t;
                for (std::int64_t oh = rh.lo; oh < rh.hi; ++oh) {
                  const auto ih = oh * s + kh - g.pad_h;
                  const float* in_row = in + (it * g.in_h + ih) * g.in_w;
                  float* out_row = out + (ot * oh_n + oh) * ow_n;
                  if (s == 1) {
                    for (std::int64_t ow = rw.lo; ow < rw.hi; ++ow) out_row[ow] += wv * in_row[ow + shift];
                  } else {
                    for (std::int64_t ow = rw.lo; ow < rw.hi; ++ow) out_row[ow] += wv * in_row[ow * s + shift];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

void conv3d_backward_input(const Conv3dGeometry& g, std::span<const float> grad_output, std::span<const float> weight,
                           std::span<float> grad_input) {
  check_sizes(g, grad_input.size(), weight.size(), grad_output.size());
  const auto ot_n = g.out_t(), oh_n = g.out_h(), ow_n = g.out_w();
  const auto out_plane = ot_n * oh_n * ow_n;
  const auto in_plane = g.in_t * g.in_h * g.in_w;
  const auto ksize = g.k_t * g.k_h * g.k_w;
  const auto s = g.stride;

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t b = 0; b < g.batch; ++b) {
    for (std::int64_t ci = 0; ci < g.in_channels; ++ci) {
      float* gin = grad_input.data() + (b * g.in_channels + ci) * in_plane;
      std::fill(gin, gin + in_plane, 0.0f);
      for (std::int64_t co = 0; co < g.out_channels; ++co) {
        const float* gout = grad_output.data() + (b * g.out_channels + co) * out_plane;
        const float* wk = weight.data() + (co * g.in_channels + ci) * ksize;
        for (std::int64_t kt = 0; kt < g.k_t; ++kt) {
          const auto rt = valid_outputs(ot_n, g.in_t, kt, g.pad_t, s);
          for (std::int64_t kh = 0; kh < g.k_h; ++kh) {
            const auto rh = valid_outputs(oh_n, g.in_h, kh, g.pad_h, s);
            for (std::int64_t kw = 0; kw < g.k_w; ++kw) {
              const auto rw = valid_outputs(ow_n, g.in_w, kw, g.pad_w, s);
              const float wv = wk[(kt * g.k_h + kh) * g.k_w + kw];
              const auto shift = kw - g.pad_w;
              for (std::int64_t ot = rt.lo; ot < rt.hi; ++ot) {
                const auto it = ot * s + kt - g.pad_t;
                for (std::int64_t oh = rh.lo; oh < rh.hi; ++oh) {
                  const auto ih = oh * s + kh - g.pad_h;
                  float* gin_row = gin + (it * g.in_h + ih) * g.in_w;
                  const float* gout_row = gout + (ot * oh_n + oh) * ow_n;
                  if (s == 1) {
                    for (std::int64_t ow = rw.lo; ow < rw.hi; ++ow) gin_row[ow + shift] += wv * gout_row[ow];
                  } else {
                    for (std::int64_t ow = rw.lo; ow < rw.hi; ++ow) gin_row[ow * s + shift] += wv * gout_row[ow];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

void conv3d_backward_weight(const Conv3dGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                            std::span<float> grad_weight, std::span<float> grad_bias) {
  check_sizes(g, input.size(), grad_weight.size(), grad_output.size());
  const auto ot_n = g.out_t(), oh_n = g.out_h(), ow_n = g.out_w();
  const auto out_plane = ot_n * oh_n * ow_n;
  const auto in_plane = g.in_t * g.in_h * g.in_w;
  const auto ksize = g.k_t * g.k_h * g.k_w;
  const auto s = g.stride;

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t co = 0; co < g.out_channels; ++co) {
    for (std::int64_t ci = 0; ci < g.in_channels; ++ci) {
      float* gw = grad_weight.data() + (co * g.in_channels + ci) * ksize;
      for (std::int64_t kt = 0; kt < g.k_t; ++kt) {
        const auto rt = valid_outputs(ot_n, g.in_t, kt, g.pad_t, s);
        for (std::int64_t kh = 0; kh < g.k_h; ++kh) {
          const auto rh = valid_outputs(oh_n, g.in_h, kh, g.pad_h, s);
          for (std::int64_t kw = 0; kw < g.k_w; ++kw) {
            const auto rw = valid_outputs(ow_n, g.in_w, kw, g.pad_w, s);
            const auto shift = kw - g.pad_w;
            double acc = 0.0;
            for (std::int64_t b = 0; b < g.batch; ++b) {
              const float* in = input.data() + (b * g.in_channels + ci) * in_plane;
              const float* gout = grad_output.data() + (b * g.out_channels + co) * out_plane;
              for (std::int64_t ot = rt.lo; ot < rt.hi; ++ot) {
                const auto it = ot * s + kt - g.pad_t;
                for (std::int64_t oh = rh.lo; oh < rh.hi; ++oh) {
                  const auto ih = oh * s + kh - g.pad_h;
                  const float* in_row = in + (it * g.in_h + ih) * g.in_w;
                  const float* gout_row = gout + (ot * oh_n + oh) * ow_n;
                  float partial = 0.0f;
                  if (s == 1) {
                    for (std::int64_t ow = rw.lo; ow < rw.hi; ++ow) partial += gout_row[ow] * in_row[ow + shift];
                  } else {
                    for (std::int64_t ow = rw.lo; ow < rw.hi; ++ow) partial += gout_row[ow] * in_row[ow * s + shift];
                  }
                  acc += partial;
                }
              }
            }
            gw[(kt * g.k_h + kh) * g.k_w + kw] = static_cast<float>(acc);
          }
        }
      }
    }
  }

  if (!grad_bias.empty()) {
#pragma omp parallel for schedule(static)
    for (std::int64_t co = 0; co < g.out_channels; ++co) {
      double acc = 0.0;
      for (std::int64_t b = 0; b < g.batch; ++b) {
        const float* gout = grad_output.data() + (b * g.out_channels + co) * out_plane;
        for (std::int64_t i = 0; i < out_plane; ++i) acc += gout[i];
      }
      grad_bias[static_cast<std::size_t>(co)] = static_cast<float>(acc);
    }
  }
}

}  // namespace stssl::kernels
