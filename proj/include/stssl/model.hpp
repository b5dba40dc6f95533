// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stssl/autograd.hpp"
#include "stssl/random.hpp"
#include "stssl/tensor.hpp"
#include "stssl/videodata.hpp"

namespace stssl {

/// Compact Darknet-style 3D encoder: a stem convolution, then per stage a
/// stride-2 convolution followed by residual 1x1x1 / 3x3x3 blocks, global
/// average pooling and a linear map to the representation.
struct EncoderConfig {
  std::vector<std::int64_t> stage_channels{8, 16, 32};
  std::int64_t blocks_per_stage = 1;
  std::int64_t representation_dim = 64;
  double leaky_slope = 0.1;
  std::array<std::int64_t, 3> input_shape{16, 64, 64};  // T, H, W

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

struct HeadConfig {
  std::int64_t projector_hidden = 256;
  std::int64_t projector_out = 64;
  std::int64_t predictor_hidden = 256;
  std::int64_t n_classes = 2;

  void validate() const;
  bool operator==(const HeadConfig&) const = default;
};

struct Param {
  Tensor value;
  bool trainable = true;
  bool operator==(const Param&) const = default;
};

/// Named parameter tensors, iterated in name order.
class ModelParams {
 public:
  void add(const std::string& name, Tensor value, bool trainable = true);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Param& at(const std::string& name) const;
  Param& at(const std::string& name);
  const std::map<std::string, Param>& entries() const noexcept { return entries_; }
  std::map<std::string, Param>& entries() noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  /// Sets the trainable flag of every tensor whose name starts with prefix.
  void set_trainable(std::string_view prefix, bool trainable);
  /// Tensors whose names start with prefix.
  ModelParams subset(std::string_view prefix) const;
  /// Copies values (and flags) of every tensor in `other` into this set.
  void assign_from(const ModelParams& other);

  bool operator==(const ModelParams&) const = default;

 private:
  std::map<std::string, Param> entries_;
};

std::int64_t count_parameters(const ModelParams& params, bool trainable_only);

/// He-normal convolution weights (gain for the leaky slope), unit norm scale,
/// zero shift; names are prefixed with "encoder.".
void add_encoder_params(ModelParams& params, const EncoderConfig& config, Rng& rng);
/// linear -> norm -> leaky -> linear, names "<prefix>.fc1.*", "<prefix>.bn.*", "<prefix>.fc2.*".
void add_mlp_params(ModelParams& params, const std::string& prefix, std::int64_t in, std::int64_t hidden,
                    std::int64_t out, Rng& rng);
/// Zero-initialized "classifier.weight" [C, D] and "classifier.bias" [C].
void add_classifier_params(ModelParams& params, std::int64_t representation_dim, std::int64_t n_classes);

/// Encoder + projector + predictor, as used by self-supervised pretraining.
ModelParams make_ssl_params(const EncoderConfig& encoder, const HeadConfig& heads, std::uint64_t seed);
/// Encoder + classifier.
ModelParams make_classifier_params(const EncoderConfig& encoder, const HeadConfig& heads, std::uint64_t seed);

/// Exposes ModelParams as tape leaves. With allow_grad, trainable tensors
/// become named grad-requiring leaves; otherwise every tensor is a constant
/// (stop-gradient branch).
class Binder {
 public:
  Binder(Tape& tape, const ModelParams& params, bool allow_grad = true)
      : tape_(tape), params_(params), allow_grad_(allow_grad) {}

  Var operator()(const std::string& name);
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  const ModelParams& params_;
  bool allow_grad_;
  std::map<std::string, Var> bound_;
};

/// Stacks clips into a [B, 1, T, H, W] tensor. All clips must share a shape.
Tensor make_batch(const std::vector<VideoClip>& clips);

/// [B, 1, T, H, W] -> [B, D]. Throws InputError when T, H, W differ from
/// config.input_shape.
Var encoder_forward(Binder& bind, const EncoderConfig& config, Var input);
/// [B, Din] -> [B, out].
Var mlp_forward(Binder& bind, const std::string& prefix, Var input, double leaky_slope, bool use_norm = true);
/// [B, D] -> [B, C] unnormalized logits.
Var classifier_forward(Binder& bind, Var representation);

/// Softmax probability of `class_index` for every clip of one batch.
/// Normalization uses the statistics of this batch, as in training.
std::vector<double> predict_probabilities(const ModelParams& params, const EncoderConfig& config,
                                          const std::vector<VideoClip>& batch, std::int64_t class_index);
/// Probability for one clip evaluated alone (a batch of one).
double predict_probability(const ModelParams& params, const EncoderConfig& config, const VideoClip& clip,
                           std::int64_t class_index);

}  // namespace stssl
