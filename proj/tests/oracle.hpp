// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

// Double-precision forward implementations written independently of the
// library, used as finite-difference oracles and value cross-checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stssl/model.hpp"
#include "stssl/tensor.hpp"

namespace oracle {

using stssl::Shape;

struct D {
  Shape shape;
  std::vector<double> v;

  D() = default;
  explicit D(Shape s, double fill = 0.0) : shape(std::move(s)), v(static_cast<std::size_t>(numel()), fill) {}
  std::int64_t numel() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  double& operator[](std::int64_t i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return v[static_cast<std::size_t>(i)]; }
};

inline D from_tensor(const stssl::Tensor& t) {
  D d;
  d.shape = t.shape();
  d.v.assign(t.data().begin(), t.data().end());
  return d;
}

// x [B,Ci,T,H,W], w [Co,Ci,k,k,k], zero padding (k-1)/2 on every axis.
inline D conv3d(const D& x, const D& w, const D* bias, std::int64_t stride) {
  const auto B = x.shape[0], Ci = x.shape[1], T = x.shape[2], H = x.shape[3], W = x.shape[4];
  const auto Co = w.shape[0], k = w.shape[2], p = (k - 1) / 2;
  const auto To = (T + 2 * p - k) / stride + 1, Ho = (H + 2 * p - k) / stride + 1, Wo = (W + 2 * p - k) / stride + 1;
  D y({B, Co, To, Ho, Wo});
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t co = 0; co < Co; ++co)
      for (std::int64_t t = 0; t < To; ++t)
        for (std::int64_t h = 0; h < Ho; ++h)
          for (std::int64_t ww = 0; ww < Wo; ++ww) {
            double acc = bias ? (*bias)[co] : 0.0;
            for (std::int64_t ci = 0; ci < Ci; ++ci)
              for (std::int64_t a = 0; a < k; ++a)
                for (std::int64_t c = 0; c < k; ++c)
                  for (std::int64_t e = 0; e < k; ++e) {
                    const auto it = t * stride + a - p, ih = h * stride + c - p, iw = ww * stride + e - p;
                    if (it < 0 || it >= T || ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                    acc += x[(((b * Ci + ci) * T + it) * H + ih) * W + iw] *
                           w[(((co * Ci + ci) * k + a) * k + c) * k + e];
                  }
            y[(((b * Co + co) * To + t) * Ho + h) * Wo + ww] = acc;
          }
  return y;
}

// Normalization over every axis but 1, biased variance.
inline D batch_norm(const D& x, const D& gamma, const D& beta, double eps = 1e-5) {
  const auto B = x.shape[0], C = x.shape[1];
  const auto S = x.numel() / (B * C);
  D y(x.shape);
  for (std::int64_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t s = 0; s < S; ++s) mean += x[(b * C + c) * S + s];
    mean /= static_cast<double>(B * S);
    double var = 0.0;
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t s = 0; s < S; ++s) var += std::pow(x[(b * C + c) * S + s] - mean, 2);
    var /= static_cast<double>(B * S);
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t s = 0; s < S; ++s) {
        const auto i = (b * C + c) * S + s;
        y[i] = gamma[c] * (x[i] - mean) / std::sqrt(var + eps) + beta[c];
      }
  }
  return y;
}

inline D leaky_relu(D x, double slope) {
  for (auto& e : x.v) e = e > 0 ? e : slope * e;
  return x;
}

// Records which side of the kink every activation sits on, or replays a
// recorded pattern so that finite differences stay on one linear piece.
struct KinkPattern {
  std::vector<std::vector<bool>> positive;
  bool replay = false;
  std::size_t next = 0;
};

inline D leaky_relu(D x, double slope, KinkPattern* pattern) {
  if (!pattern) return leaky_relu(std::move(x), slope);
  if (!pattern->replay) {
    std::vector<bool> side(x.v.size());
    for (std::size_t i = 0; i < x.v.size(); ++i) side[i] = x.v[i] > 0;
    pattern->positive.push_back(std::move(side));
  }
  const auto& side = pattern->positive.at(pattern->next++);
  for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = side[i] ? x.v[i] : slope * x.v[i];
  return x;
}

inline D add(D a, const D& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

inline D global_avg_pool(const D& x) {
  const auto B = x.shape[0], C = x.shape[1];
  const auto S = x.numel() / (B * C);
  D y({B, C});
  for (std::int64_t i = 0; i < B * C; ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < S; ++j) s += x[i * S + j];
    y[i] = s / static_cast<double>(S);
  }
  return y;
}

inline D linear(const D& x, const D& w, const D& b) {
  const auto B = x.shape[0], In = x.shape[1], Out = w.shape[0];
  D y({B, Out});
  for (std::int64_t r = 0; r < B; ++r)
    for (std::int64_t o = 0; o < Out; ++o) {
      double s = b[o];
      for (std::int64_t i = 0; i < In; ++i) s += x[r * In + i] * w[o * In + i];
      y[r * Out + o] = s;
    }
  return y;
}

inline double byol(const D& q, const D& z) {
  const auto B = q.shape[0], F = q.shape[1];
  double total = 0.0;
  for (std::int64_t r = 0; r < B; ++r) {
    double qq = 0, zz = 0, qz = 0;
    for (std::int64_t j = 0; j < F; ++j) {
      qq += q[r * F + j] * q[r * F + j];
      zz += z[r * F + j] * z[r * F + j];
      qz += q[r * F + j] * z[r * F + j];
    }
    total += 2.0 - 2.0 * qz / std::sqrt(qq * zz);
  }
  return total / static_cast<double>(B);
}

// Rows i and i + N/2 are positives; every other row is a negative.
inline double ntxent(const D& z, double temperature) {
  const auto N = z.shape[0], F = z.shape[1], half = N / 2;
  std::vector<double> u(z.v);
  for (std::int64_t r = 0; r < N; ++r) {
    double n = 0;
    for (std::int64_t j = 0; j < F; ++j) n += u[r * F + j] * u[r * F + j];
    n = std::sqrt(n);
    for (std::int64_t j = 0; j < F; ++j) u[r * F + j] /= n;
  }
  auto sim = [&](std::int64_t a, std::int64_t b) {
    double s = 0;
    for (std::int64_t j = 0; j < F; ++j) s += u[a * F + j] * u[b * F + j];
    return s / temperature;
  };
  double total = 0.0;
  for (std::int64_t i = 0; i < N; ++i) {
    const auto pos = i < half ? i + half : i - half;
    double denom = 0.0;
    for (std::int64_t k = 0; k < N; ++k)
      if (k != i) denom += std::exp(sim(i, k));
    total += -sim(i, pos) + std::log(denom);
  }
  return total / static_cast<double>(N);
}

inline double cross_entropy(const D& logits, const std::vector<int>& labels) {
  const auto B = logits.shape[0], C = logits.shape[1];
  double total = 0.0;
  for (std::int64_t r = 0; r < B; ++r) {
    double denom = 0.0;
    for (std::int64_t c = 0; c < C; ++c) denom += std::exp(logits[r * C + c]);
    total += std::log(denom) - logits[r * C + labels[static_cast<std::size_t>(r)]];
  }
  return total / static_cast<double>(B);
}

using Params = std::map<std::string, D>;

inline Params from_params(const stssl::ModelParams& p) {
  Params out;
  for (const auto& [name, param] : p.entries()) out[name] = from_tensor(param.value);
  return out;
}

inline D conv_bn_act(const Params& p, const std::string& prefix, const D& x, std::int64_t stride, double slope,
                     KinkPattern* kinks) {
  D y = conv3d(x, p.at(prefix + ".conv.weight"), nullptr, stride);
  y = batch_norm(y, p.at(prefix + ".bn.gamma"), p.at(prefix + ".bn.beta"));
  return leaky_relu(std::move(y), slope, kinks);
}

// The encoder architecture restated: stem, per stage a stride-2 conv and
// residual reduce/expand blocks, average pool, linear.
inline D encoder(const Params& p, const stssl::EncoderConfig& cfg, const D& x, KinkPattern* kinks = nullptr) {
  if (kinks) kinks->next = 0;
  D h = conv_bn_act(p, "encoder.stem", x, 1, cfg.leaky_slope, kinks);
  for (std::size_t s = 0; s < cfg.stage_channels.size(); ++s) {
    const std::string stage = "encoder.stage" + std::to_string(s);
    h = conv_bn_act(p, stage + ".down", h, 2, cfg.leaky_slope, kinks);
    for (std::int64_t b = 0; b < cfg.blocks_per_stage; ++b) {
      const std::string block = stage + ".block" + std::to_string(b);
      D r = conv_bn_act(p, block + ".reduce", h, 1, cfg.leaky_slope, kinks);
      r = conv_bn_act(p, block + ".expand", r, 1, cfg.leaky_slope, kinks);
      h = add(std::move(h), r);
    }
  }
  return linear(global_avg_pool(h), p.at("encoder.fc.weight"), p.at("encoder.fc.bias"));
}

inline double dot(const D& x, const D& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.v.size(); ++i) s += x.v[i] * w.v[i];
  return s;
}

// Central difference of f with respect to every element of `target`.
inline std::vector<double> central_difference(D& target, const std::function<double()>& f, double h = 1e-3) {
  std::vector<double> g(target.v.size());
  for (std::size_t i = 0; i < target.v.size(); ++i) {
    const double saved = target.v[i];
    target.v[i] = saved + h;
    const double up = f();
    target.v[i] = saved - h;
    const double down = f();
    target.v[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
