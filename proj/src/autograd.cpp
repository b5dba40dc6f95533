// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "stssl/errors.hpp"
#include "stssl/kernels.hpp"

namespace stssl {

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("use of an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad, std::string name) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(name), {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const auto& p : parents) {
    if (&p.tape() != this) throw UsageError("operands recorded on different tapes");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor{}, needs, {}, needs ? std::move(backward) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  auto& node = nodes_.at(id);
  if (node.grad.empty() && node.value.numel() > 0) node.grad = Tensor(node.value.shape(), 0.0f);
  return node.grad;
}

void Tape::backward(Var loss) {
  if (nodes_.empty() || !loss.valid() || &loss.tape() != this || loss.id() >= nodes_.size()) {
    throw UsageError("backward called without a recorded forward pass");
  }
  if (nodes_[loss.id()].value.numel() != 1) throw UsageError("backward needs a scalar loss");
  for (auto& n : nodes_) n.grad = Tensor{};
  grad(loss.id())[0] = 1.0f;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (node.grad.empty() || !node.backward) continue;
    node.backward(*this, i);
  }
}

std::map<std::string, Tensor> Tape::gradients(Var loss) {
  backward(loss);
  std::map<std::string, Tensor> out;
  for (auto& n : nodes_) {
    if (n.requires_grad && !n.name.empty() && !n.grad.empty()) out.emplace(n.name, n.grad);
  }
  return out;
}

namespace ops {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

}  // namespace

Var conv3d(Var x, Var weight, std::optional<Var> bias, std::int64_t stride) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  require(xs.size() == 5 && ws.size() == 5, "conv3d expects rank-5 input and weight");
  require(xs[1] == ws[1], "conv3d channel mismatch: input " + shape_string(xs) + " weight " + shape_string(ws));
  require(ws[2] == ws[3] && ws[3] == ws[4] && ws[2] % 2 == 1, "conv3d expects an odd cubic kernel");
  if (bias) require(bias->shape() == Shape{ws[0]}, "conv3d bias shape mismatch");
  const auto g = kernels::make_conv3d(xs[0], xs[1], ws[0], xs[2], xs[3], xs[4], ws[2], stride);
  require(g.out_t() >= 1 && g.out_h() >= 1 && g.out_w() >= 1, "conv3d input too small " + shape_string(xs));

  Tensor out(Shape{g.batch, g.out_channels, g.out_t(), g.out_h(), g.out_w()});
  kernels::conv3d_forward(g, x.value().data(), weight.value().data(),
                          bias ? bias->value().data() : std::span<const float>{}, out.data());

  const auto xid = x.id(), wid = weight.id();
  const std::optional<std::size_t> bid = bias ? std::optional<std::size_t>(bias->id()) : std::nullopt;
  auto backward = [g, xid, wid, bid](Tape& tape, std::size_t self) {
    const Tensor& gout = tape.grad(self);
    if (tape.requires_grad(xid)) {
      Tensor gin(tape.value(xid).shape());
      kernels::conv3d_backward_input(g, gout.data(), tape.value(wid).data(), gin.data());
      auto& dst = tape.grad(xid);
      for (std::int64_t i = 0; i < gin.numel(); ++i) dst[i] += gin[i];
    }
    const bool want_w = tape.requires_grad(wid);
    const bool want_b = bid && tape.requires_grad(*bid);
    if (want_w || want_b) {
      Tensor gw(tape.value(wid).shape());
      Tensor gb(Shape{g.out_channels});
      kernels::conv3d_backward_weight(g, tape.value(xid).data(), gout.data(), gw.data(),
                                      want_b ? gb.data() : std::span<float>{});
      if (want_w) {
        auto& dst = tape.grad(wid);
        for (std::int64_t i = 0; i < gw.numel(); ++i) dst[i] += gw[i];
      }
      if (want_b) {
        auto& dst = tape.grad(*bid);
        for (std::int64_t i = 0; i < gb.numel(); ++i) dst[i] += gb[i];
      }
    }
  };
  if (bias) return x.tape().record(std::move(out), {x, weight, *bias}, backward);
  return x.tape().record(std::move(out), {x, weight}, backward);
}

Var batch_norm(Var x, Var gamma, Var beta, double eps) {
  const auto& xs = x.shape();
  require(xs.size() >= 2, "batch_norm expects rank >= 2");
  require(gamma.shape() == Shape{xs[1]} && beta.shape() == Shape{xs[1]}, "batch_norm parameter shape mismatch");
  kernels::NormLayout layout{xs[0], xs[1], 1};
  for (std::size_t i = 2; i < xs.size(); ++i) layout.inner *= xs[i];

  Tensor y(xs);
  auto x_hat = std::make_shared<Tensor>(xs);
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(layout.channels));
  std::vector<double> mean(static_cast<std::size_t>(layout.channels));
  kernels::batchnorm_forward(layout, x.value().data(), gamma.value().data(), beta.value().data(), eps,
                             x_hat->data(), mean, *inv_std, y.data());

  const auto xid = x.id(), gid = gamma.id(), bid = beta.id();
  return x.tape().record(std::move(y), {x, gamma, beta}, [=](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    std::span<float> gx = tape.requires_grad(xid) ? tape.grad(xid).data() : std::span<float>{};
    std::span<float> gg = tape.requires_grad(gid) ? tape.grad(gid).data() : std::span<float>{};
    std::span<float> gb = tape.requires_grad(bid) ? tape.grad(bid).data() : std::span<float>{};
    kernels::batchnorm_backward(layout, gy.data(), x_hat->data(), tape.value(gid).data(), *inv_std, gx, gg, gb);
  });
}

Var leaky_relu(Var x, double slope) {
  Tensor y(x.shape());
  const auto& xv = x.value();
  const auto s = static_cast<float>(slope);
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = xv[i] > 0.0f ? xv[i] : s * xv[i];
  const auto xid = x.id();
  return x.tape().record(std::move(y), {x}, [xid, s](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    const Tensor& xv = tape.value(xid);
    auto& gx = tape.grad(xid);
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += xv[i] > 0.0f ? gy[i] : s * gy[i];
  });
}

Var add(Var a, Var b) {
  require(a.shape() == b.shape(), "add shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor y(a.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] + b.value()[i];
  const auto aid = a.id(), bid = b.id();
  return a.tape().record(std::move(y), {a, b}, [aid, bid](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    for (auto id : {aid, bid}) {
      if (!tape.requires_grad(id)) continue;
      auto& g = tape.grad(id);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += gy[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor y(a.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = static_cast<float>(factor * a.value()[i]);
  const auto aid = a.id();
  return a.tape().record(std::move(y), {a}, [aid, factor](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    auto& g = tape.grad(aid);
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += static_cast<float>(factor * gy[i]);
  });
}

Var global_avg_pool(Var x) {
  const auto& xs = x.shape();
  require(xs.size() >= 3, "global_avg_pool expects rank >= 3");
  std::int64_t inner = 1;
  for (std::size_t i = 2; i < xs.size(); ++i) inner *= xs[i];
  const auto rows = xs[0] * xs[1];
  Tensor y(Shape{xs[0], xs[1]});
  const auto& xv = x.value();
  for (std::int64_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < inner; ++i) sum += xv[r * inner + i];
    y[r] = static_cast<float>(sum / static_cast<double>(inner));
  }
  const auto xid = x.id();
  return x.tape().record(std::move(y), {x}, [xid, rows, inner](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    auto& gx = tape.grad(xid);
    for (std::int64_t r = 0; r < rows; ++r) {
      const float g = static_cast<float>(gy[r] / static_cast<double>(inner));
      for (std::int64_t i = 0; i < inner; ++i) gx[r * inner + i] += g;
    }
  });
}

Var linear(Var x, Var weight, Var bias) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  require(xs.size() == 2 && ws.size() == 2 && xs[1] == ws[1],
          "linear shape mismatch: input " + shape_string(xs) + " weight " + shape_string(ws));
  require(bias.shape() == Shape{ws[0]}, "linear bias shape mismatch");
  const auto batch = xs[0], in = xs[1], out = ws[0];
  Tensor y(Shape{batch, out});
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t o = 0; o < out; ++o) {
      double acc = bv[o];
      for (std::int64_t i = 0; i < in; ++i) acc += static_cast<double>(xv[b * in + i]) * wv[o * in + i];
      y[b * out + o] = static_cast<float>(acc);
    }
  }
  const auto xid = x.id(), wid = weight.id(), bid = bias.id();
  return x.tape().record(std::move(y), {x, weight, bias}, [=](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    const Tensor& xv = tape.value(xid);
    const Tensor& wv = tape.value(wid);
    if (tape.requires_grad(xid)) {
      auto& gx = tape.grad(xid);
      for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t i = 0; i < in; ++i) {
          double acc = 0.0;
          for (std::int64_t o = 0; o < out; ++o) acc += static_cast<double>(gy[b * out + o]) * wv[o * in + i];
          gx[b * in + i] += static_cast<float>(acc);
        }
    }
    if (tape.requires_grad(wid)) {
      auto& gw = tape.grad(wid);
      for (std::int64_t o = 0; o < out; ++o)
        for (std::int64_t i = 0; i < in; ++i) {
          double acc = 0.0;
          for (std::int64_t b = 0; b < batch; ++b) acc += static_cast<double>(gy[b * out + o]) * xv[b * in + i];
          gw[o * in + i] += static_cast<float>(acc);
        }
    }
    if (tape.requires_grad(bid)) {
      auto& gb = tape.grad(bid);
      for (std::int64_t o = 0; o < out; ++o) {
        double acc = 0.0;
        for (std::int64_t b = 0; b < batch; ++b) acc += gy[b * out + o];
        gb[o] += static_cast<float>(acc);
      }
    }
  });
}

Var concat_rows(Var a, Var b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  require(as.size() == 2 && bs.size() == 2 && as[1] == bs[1], "concat_rows shape mismatch");
  Tensor y(Shape{as[0] + bs[0], as[1]});
  std::copy(a.value().data().begin(), a.value().data().end(), y.data().begin());
  std::copy(b.value().data().begin(), b.value().data().end(), y.data().begin() + a.value().numel());
  const auto aid = a.id(), bid = b.id();
  const auto split = a.value().numel();
  return a.tape().record(std::move(y), {a, b}, [aid, bid, split](Tape& tape, std::size_t self) {
    const Tensor& gy = tape.grad(self);
    if (tape.requires_grad(aid)) {
      auto& g = tape.grad(aid);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += gy[i];
    }
    if (tape.requires_grad(bid)) {
      auto& g = tape.grad(bid);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += gy[split + i];
    }
  });
}

Var stop_gradient(Var x) { return x.tape().constant(x.value()); }

Var sum_squares(Var x) {
  double acc = 0.0;
  for (float v : x.value().data()) acc += static_cast<double>(v) * v;
  const auto xid = x.id();
  return x.tape().record(Tensor::scalar(static_cast<float>(acc)), {x}, [xid](Tape& tape, std::size_t self) {
    const float gy = tape.grad(self)[0];
    const Tensor& xv = tape.value(xid);
    auto& gx = tape.grad(xid);
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += 2.0f * xv[i] * gy;
  });
}

Var dot(Var x, const Tensor& weights) {
  require(x.shape() == weights.shape(), "dot shape mismatch");
  double acc = 0.0;
  for (std::int64_t i = 0; i < weights.numel(); ++i) acc += static_cast<double>(x.value()[i]) * weights[i];
  const auto xid = x.id();
  return x.tape().record(Tensor::scalar(static_cast<float>(acc)), {x}, [xid, weights](Tape& tape, std::size_t self) {
    const float gy = tape.grad(self)[0];
    auto& gx = tape.grad(xid);
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += weights[i] * gy;
  });
}

namespace {

std::vector<double> row_norms(const Tensor& m, const char* what) {
  const auto rows = m.dim(0), cols = m.dim(1);
  std::vector<double> norms(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    double sq = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) sq += static_cast<double>(m[r * cols + c]) * m[r * cols + c];
    if (!(sq > 0.0)) throw ComputationError(std::string(what) + ": zero-norm embedding row " + std::to_string(r));
    norms[static_cast<std::size_t>(r)] = std::sqrt(sq);
  }
  return norms;
}

}  // namespace

Var byol_loss(Var q, Var z) {
  require(q.shape().size() == 2 && q.shape() == z.shape(), "byol_loss shape mismatch");
  const auto rows = q.shape()[0], cols = q.shape()[1];
  const auto qn = row_norms(q.value(), "byol_loss");
  const auto zn = row_norms(z.value(), "byol_loss");
  std::vector<double> cosines(static_cast<std::size_t>(rows));
  double total = 0.0;
  for (std::int64_t r = 0; r < rows; ++r) {
    double d = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) d += static_cast<double>(q.value()[r * cols + c]) * z.value()[r * cols + c];
    const double cosine = std::clamp(d / (qn[static_cast<std::size_t>(r)] * zn[static_cast<std::size_t>(r)]), -1.0, 1.0);
    cosines[static_cast<std::size_t>(r)] = cosine;
    total += 2.0 - 2.0 * cosine;
  }
  const auto qid = q.id(), zid = z.id();
  return q.tape().record(Tensor::scalar(static_cast<float>(total / static_cast<double>(rows))), {q},
                         [=](Tape& tape, std::size_t self) {
                           const double gy = tape.grad(self)[0];
                           const Tensor& qv = tape.value(qid);
                           const Tensor& zv = tape.value(zid);
                           auto& gq = tape.grad(qid);
                           for (std::int64_t r = 0; r < rows; ++r) {
                             const double a = qn[static_cast<std::size_t>(r)];
                             const double b = zn[static_cast<std::size_t>(r)];
                             const double cosine = cosines[static_cast<std::size_t>(r)];
                             const double k = -2.0 * gy / static_cast<double>(rows);
                             for (std::int64_t c = 0; c < cols; ++c) {
                               const auto i = r * cols + c;
                               gq[i] += static_cast<float>(k * (zv[i] / (a * b) - cosine * qv[i] / (a * a)));
                             }
                           }
                         });
}

Var ntxent_loss(Var z, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("ntxent temperature must be > 0");
  require(z.shape().size() == 2 && z.shape()[0] % 2 == 0 && z.shape()[0] >= 4, "ntxent_loss expects 2B x P with B >= 2");
  const auto n = z.shape()[0], cols = z.shape()[1], half = n / 2;
  const auto norms = row_norms(z.value(), "ntxent_loss");
  auto unit = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n * cols));
  for (std::int64_t r = 0; r < n; ++r)
    for (std::int64_t c = 0; c < cols; ++c)
      (*unit)[static_cast<std::size_t>(r * cols + c)] = z.value()[r * cols + c] / norms[static_cast<std::size_t>(r)];

  // softmax over j != i of s_ij = <u_i, u_j> / temperature
  auto prob = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n * n), 0.0);
  double total = 0.0;
  std::vector<double> logits(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (std::int64_t c = 0; c < cols; ++c) d += (*unit)[static_cast<std::size_t>(i * cols + c)] * (*unit)[static_cast<std::size_t>(j * cols + c)];
      logits[static_cast<std::size_t>(j)] = d / temperature;
      max_logit = std::max(max_logit, logits[static_cast<std::size_t>(j)]);
    }
    double denom = 0.0;
    for (std::int64_t j = 0; j < n; ++j)
      if (j != i) denom += std::exp(logits[static_cast<std::size_t>(j)] - max_logit);
    const auto pos = (i + half) % n;
    total += -(logits[static_cast<std::size_t>(pos)] - max_logit) + std::log(denom);
    for (std::int64_t j = 0; j < n; ++j)
      if (j != i) (*prob)[static_cast<std::size_t>(i * n + j)] = std::exp(logits[static_cast<std::size_t>(j)] - max_logit) / denom;
  }
  const auto zid = z.id();
  return z.tape().record(Tensor::scalar(static_cast<float>(total / static_cast<double>(n))), {z},
                         [=](Tape& tape, std::size_t self) {
                           const double gy = tape.grad(self)[0];
                           // G_ij = dL/ds_ij
                           std::vector<double> g(static_cast<std::size_t>(n * n), 0.0);
                           for (std::int64_t i = 0; i < n; ++i)
                             for (std::int64_t j = 0; j < n; ++j) {
                               if (i == j) continue;
                               const double target = j == (i + half) % n ? 1.0 : 0.0;
                               g[static_cast<std::size_t>(i * n + j)] =
                                   gy * ((*prob)[static_cast<std::size_t>(i * n + j)] - target) / static_cast<double>(n);
                             }
                           auto& gz = tape.grad(zid);
                           std::vector<double> du(static_cast<std::size_t>(cols));
                           for (std::int64_t i = 0; i < n; ++i) {
                             std::fill(du.begin(), du.end(), 0.0);
                             for (std::int64_t j = 0; j < n; ++j) {
                               if (i == j) continue;
                               const double w = (g[static_cast<std::size_t>(i * n + j)] + g[static_cast<std::size_t>(j * n + i)]) / temperature;
                               for (std::int64_t c = 0; c < cols; ++c) du[static_cast<std::size_t>(c)] += w * (*unit)[static_cast<std::size_t>(j * cols + c)];
                             }
                             double radial = 0.0;
                             for (std::int64_t c = 0; c < cols; ++c) radial += du[static_cast<std::size_t>(c)] * (*unit)[static_cast<std::size_t>(i * cols + c)];
                             const double inv = 1.0 / norms[static_cast<std::size_t>(i)];
                             for (std::int64_t c = 0; c < cols; ++c) {
                               const auto k = static_cast<std::size_t>(i * cols + c);
                               gz[static_cast<std::int64_t>(k)] += static_cast<float>(inv * (du[static_cast<std::size_t>(c)] - radial * (*unit)[k]));
                             }
                           }
                         });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  const auto& s = logits.shape();
  require(s.size() == 2, "cross_entropy expects [B, C] logits");
  const auto batch = s[0], classes = s[1];
  require(static_cast<std::int64_t>(labels.size()) == batch, "cross_entropy label count mismatch");
  for (int label : labels) {
    if (label < 0 || label >= classes) throw InputError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
  }
  auto softmax = std::make_shared<std::vector<double>>(static_cast<std::size_t>(batch * classes));
  double total = 0.0;
  const auto& lv = logits.value();
  for (std::int64_t b = 0; b < batch; ++b) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t c = 0; c < classes; ++c) mx = std::max(mx, static_cast<double>(lv[b * classes + c]));
    double denom = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) denom += std::exp(lv[b * classes + c] - mx);
    const double log_denom = std::log(denom);
    for (std::int64_t c = 0; c < classes; ++c)
      (*softmax)[static_cast<std::size_t>(b * classes + c)] = std::exp(lv[b * classes + c] - mx - log_denom);
    total += -(lv[b * classes + labels[static_cast<std::size_t>(b)]] - mx - log_denom);
  }
  std::vector<int> owned(labels.begin(), labels.end());
  const auto lid = logits.id();
  return logits.tape().record(Tensor::scalar(static_cast<float>(total / static_cast<double>(batch))), {logits},
                              [=](Tape& tape, std::size_t self) {
                                const double gy = tape.grad(self)[0];
                                auto& g = tape.grad(lid);
                                for (std::int64_t b = 0; b < batch; ++b)
                                  for (std::int64_t c = 0; c < classes; ++c) {
                                    const double onehot = owned[static_cast<std::size_t>(b)] == c ? 1.0 : 0.0;
                                    g[b * classes + c] += static_cast<float>(
                                        gy * ((*softmax)[static_cast<std::size_t>(b * classes + c)] - onehot) / static_cast<double>(batch));
                                  }
                              });
}

}  // namespace ops
}  // namespace stssl
