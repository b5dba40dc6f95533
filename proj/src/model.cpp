// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/model.hpp"

#include <algorithm>
#include <cmath>

#include "stssl/errors.hpp"

namespace stssl {

void EncoderConfig::validate() const {
  if (stage_channels.empty()) throw ConfigError("encoder needs at least one stage");
  for (auto c : stage_channels)
    if (c < 1) throw ConfigError("encoder stage channels must be >= 1");
  if (blocks_per_stage < 0) throw ConfigError("blocks_per_stage must be >= 0");
  if (representation_dim < 2) throw ConfigError("representation_dim must be >= 2");
  for (auto e : input_shape)
    if (e < 1) throw ConfigError("encoder input_shape extents must be >= 1");
}

void HeadConfig::validate() const {
  if (projector_hidden < 1 || projector_out < 1 || predictor_hidden < 1 || n_classes < 1) {
    throw ConfigError("head sizes must be >= 1");
  }
}

void ModelParams::add(const std::string& name, Tensor value, bool trainable) {
  if (!entries_.emplace(name, Param{std::move(value), trainable}).second) {
    throw UsageError("duplicate parameter name " + name);
  }
}

const Param& ModelParams::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw UsageError("missing parameter " + name);
  return it->second;
}

Param& ModelParams::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw UsageError("missing parameter " + name);
  return it->second;
}

void ModelParams::set_trainable(std::string_view prefix, bool trainable) {
  for (auto& [name, p] : entries_)
    if (name.starts_with(prefix)) p.trainable = trainable;
}

ModelParams ModelParams::subset(std::string_view prefix) const {
  ModelParams out;
  for (const auto& [name, p] : entries_)
    if (name.starts_with(prefix)) out.entries_.emplace(name, p);
  return out;
}

void ModelParams::assign_from(const ModelParams& other) {
  for (const auto& [name, p] : other.entries_) {
    auto& dst = at(name);
    if (dst.value.shape() != p.value.shape()) throw UsageError("shape mismatch assigning " + name);
    dst = p;
  }
}

std::int64_t count_parameters(const ModelParams& params, bool trainable_only) {
  std::int64_t n = 0;
  for (const auto& [name, p] : params.entries())
    if (!trainable_only || p.trainable) n += p.value.numel();
  return n;
}

namespace {

Tensor he_normal(Shape shape, std::int64_t fan_in, double slope, Rng& rng) {
  Tensor t(std::move(shape));
  const double stddev = std::sqrt(2.0 / ((1.0 + slope * slope) * static_cast<double>(fan_in)));
  for (auto& v : t.data()) v = static_cast<float>(stddev * rng.normal());
  return t;
}

Tensor uniform_fan_in(Shape shape, std::int64_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

void add_conv(ModelParams& p, const std::string& prefix, std::int64_t in, std::int64_t out, std::int64_t k,
              double slope, Rng& rng) {
  p.add(prefix + ".conv.weight", he_normal(Shape{out, in, k, k, k}, in * k * k * k, slope, rng));
  p.add(prefix + ".bn.gamma", Tensor(Shape{out}, 1.0f));
  p.add(prefix + ".bn.beta", Tensor(Shape{out}, 0.0f));
}

std::int64_t bottleneck(std::int64_t channels) { return std::max<std::int64_t>(1, channels / 2); }

std::string stage_name(std::size_t s) { return "encoder.stage" + std::to_string(s); }

Var conv_bn_act(Binder& bind, const std::string& prefix, Var x, std::int64_t stride, double slope) {
  Var y = ops::conv3d(x, bind(prefix + ".conv.weight"), std::nullopt, stride);
  y = ops::batch_norm(y, bind(prefix + ".bn.gamma"), bind(prefix + ".bn.beta"), 1e-5);
  return ops::leaky_relu(y, slope);
}

}  // namespace

void add_encoder_params(ModelParams& params, const EncoderConfig& config, Rng& rng) {
  config.validate();
  const double slope = config.leaky_slope;
  add_conv(params, "encoder.stem", 1, config.stage_channels.front(), 3, slope, rng);
  std::int64_t channels = config.stage_channels.front();
  for (std::size_t s = 0; s < config.stage_channels.size(); ++s) {
    const auto out = config.stage_channels[s];
    add_conv(params, stage_name(s) + ".down", channels, out, 3, slope, rng);
    for (std::int64_t b = 0; b < config.blocks_per_stage; ++b) {
      const auto block = stage_name(s) + ".block" + std::to_string(b);
      add_conv(params, block + ".reduce", out, bottleneck(out), 1, slope, rng);
      add_conv(params, block + ".expand", bottleneck(out), out, 3, slope, rng);
    }
    channels = out;
  }
  params.add("encoder.fc.weight", uniform_fan_in(Shape{config.representation_dim, channels}, channels, rng));
  params.add("encoder.fc.bias", uniform_fan_in(Shape{config.representation_dim}, channels, rng));
}

void add_mlp_params(ModelParams& params, const std::string& prefix, std::int64_t in, std::int64_t hidden,
                    std::int64_t out, Rng& rng) {
  params.add(prefix + ".fc1.weight", uniform_fan_in(Shape{hidden, in}, in, rng));
  params.add(prefix + ".fc1.bias", uniform_fan_in(Shape{hidden}, in, rng));
  params.add(prefix + ".bn.gamma", Tensor(Shape{hidden}, 1.0f));
  params.add(prefix + ".bn.beta", Tensor(Shape{hidden}, 0.0f));
  params.add(prefix + ".fc2.weight", uniform_fan_in(Shape{out, hidden}, hidden, rng));
  params.add(prefix + ".fc2.bias", uniform_fan_in(Shape{out}, hidden, rng));
}

void add_classifier_params(ModelParams& params, std::int64_t representation_dim, std::int64_t n_classes) {
  params.add("classifier.weight", Tensor(Shape{n_classes, representation_dim}, 0.0f));
  params.add("classifier.bias", Tensor(Shape{n_classes}, 0.0f));
}

ModelParams make_ssl_params(const EncoderConfig& encoder, const HeadConfig& heads, std::uint64_t seed) {
  heads.validate();
  Rng rng(seed);
  ModelParams p;
  add_encoder_params(p, encoder, rng);
  add_mlp_params(p, "projector", encoder.representation_dim, heads.projector_hidden, heads.projector_out, rng);
  add_mlp_params(p, "predictor", heads.projector_out, heads.predictor_hidden, heads.projector_out, rng);
  return p;
}

ModelParams make_classifier_params(const EncoderConfig& encoder, const HeadConfig& heads, std::uint64_t seed) {
  heads.validate();
  Rng rng(seed);
  ModelParams p;
  add_encoder_params(p, encoder, rng);
  add_classifier_params(p, encoder.representation_dim, heads.n_classes);
  return p;
}

Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Param& p = params_.at(name);
  Var v = allow_grad_ && p.trainable ? tape_.leaf(p.value, true, name) : tape_.constant(p.value);
  bound_.emplace(name, v);
  return v;
}

Tensor make_batch(const std::vector<VideoClip>& clips) {
  if (clips.empty()) throw InputError("empty batch");
  const auto& first = clips.front();
  Tensor batch(Shape{static_cast<std::int64_t>(clips.size()), 1, first.frames, first.height, first.width});
  const auto n = first.size();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (!clips[i].same_shape(first)) throw InputError("clips in a batch must share T x H x W");
    std::copy(clips[i].pixels.begin(), clips[i].pixels.end(), batch.data().begin() + static_cast<std::ptrdiff_t>(i) * n);
  }
  return batch;
}

Var encoder_forward(Binder& bind, const EncoderConfig& config, Var input) {
  const auto& s = input.shape();
  if (s.size() != 5 || s[0] < 1 || s[1] != 1 || s[2] != config.input_shape[0] || s[3] != config.input_shape[1] ||
      s[4] != config.input_shape[2]) {
    throw InputError("encoder input " + shape_string(s) + " does not match configured [B x 1 x " +
                     std::to_string(config.input_shape[0]) + " x " + std::to_string(config.input_shape[1]) + " x " +
                     std::to_string(config.input_shape[2]) + "]");
  }
  const double slope = config.leaky_slope;
  Var x = conv_bn_act(bind, "encoder.stem", input, 1, slope);
  for (std::size_t st = 0; st < config.stage_channels.size(); ++st) {
    x = conv_bn_act(bind, stage_name(st) + ".down", x, 2, slope);
    for (std::int64_t b = 0; b < config.blocks_per_stage; ++b) {
      const auto block = stage_name(st) + ".block" + std::to_string(b);
      Var h = conv_bn_act(bind, block + ".reduce", x, 1, slope);
      h = conv_bn_act(bind, block + ".expand", h, 1, slope);
      x = ops::add(x, h);
    }
  }
  Var pooled = ops::global_avg_pool(x);
  return ops::linear(pooled, bind("encoder.fc.weight"), bind("encoder.fc.bias"));
}

Var mlp_forward(Binder& bind, const std::string& prefix, Var input, double leaky_slope, bool use_norm) {
  Var h = ops::linear(input, bind(prefix + ".fc1.weight"), bind(prefix + ".fc1.bias"));
  if (use_norm) h = ops::batch_norm(h, bind(prefix + ".bn.gamma"), bind(prefix + ".bn.beta"), 1e-5);
  h = ops::leaky_relu(h, leaky_slope);
  return ops::linear(h, bind(prefix + ".fc2.weight"), bind(prefix + ".fc2.bias"));
}

Var classifier_forward(Binder& bind, Var representation) {
  return ops::linear(representation, bind("classifier.weight"), bind("classifier.bias"));
}

std::vector<double> predict_probabilities(const ModelParams& params, const EncoderConfig& config,
                                          const std::vector<VideoClip>& batch, std::int64_t class_index) {
  Tape tape;
  Binder bind(tape, params, false);
  Var logits = classifier_forward(bind, encoder_forward(bind, config, tape.constant(make_batch(batch))));
  const auto& lv = logits.value();
  const auto rows = lv.dim(0), classes = lv.dim(1);
  if (class_index < 0 || class_index >= classes) throw InputError("class index out of range");
  std::vector<double> out(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* row = lv.ptr() + r * classes;
    double mx = row[0];
    for (std::int64_t c = 1; c < classes; ++c) mx = std::max(mx, static_cast<double>(row[c]));
    double denom = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) denom += std::exp(row[c] - mx);
    out[static_cast<std::size_t>(r)] = std::exp(row[class_index] - mx) / denom;
  }
  return out;
}

double predict_probability(const ModelParams& params, const EncoderConfig& config, const VideoClip& clip,
                           std::int64_t class_index) {
  return predict_probabilities(params, config, {clip}, class_index).front();
}

}  // namespace stssl
