// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stssl/augment.hpp"
#include "stssl/model.hpp"
#include "stssl/videodata.hpp"

namespace stssl {

enum class SslVariant { kByol, kPairwiseContrastive };

enum class TrainMode { kFullySupervised, kSslFeatureExtractor, kSslFineTuned, kRandomFeatureExtractor };

const char* variant_name(SslVariant variant);
SslVariant parse_variant(const std::string& name);
const char* mode_name(TrainMode mode);
TrainMode parse_mode(const std::string& name);
bool mode_uses_pretraining(TrainMode mode);
bool mode_freezes_encoder(TrainMode mode);

struct TrainConfig {
  double learning_rate = 3e-4;
  double ema_momentum = 0.99;
  std::int64_t batch_size = 8;
  std::int64_t steps = 300;             // self-supervised steps
  std::int64_t classifier_steps = 200;  // supervised steps
  std::uint64_t seed = 0;
  SslVariant ssl_variant = SslVariant::kByol;
  double temperature = 0.1;
  bool temporal_aug_enabled = true;  // overrides AugmentationConfig::temporal_enabled
  bool augment_enabled = true;       // applies to supervised training
  std::int64_t window_length = 16;

  void validate() const;
};

/// Adam moments per parameter name.
struct OptimizerState {
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
  std::int64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// Bias-corrected Adam update of every trainable tensor that has a gradient.
/// Non-trainable tensors are left bit-unchanged even when a gradient is given.
void adam_step(ModelParams& params, const std::map<std::string, Tensor>& grads, OptimizerState& state,
               double learning_rate);

/// target <- tau * target + (1 - tau) * online, elementwise.
void ema_update(ModelParams& target, const ModelParams& online, double tau);

struct PretrainResult {
  ModelParams online;  // encoder + projector + predictor
  ModelParams target;  // empty for the pairwise variant
  std::vector<double> loss_trace;
};

/// Called after every optimizer step (and with step = 0 before the first
/// one) with the current online and target parameters.
using PretrainObserver =
    std::function<void(std::int64_t step, const ModelParams& online, const ModelParams& target, double loss)>;

PretrainResult ssl_pretrain(const std::vector<VideoClip>& unlabeled, const TrainConfig& train,
                            const AugmentationConfig& augmentation, const EncoderConfig& encoder,
                            const HeadConfig& heads, const PretrainObserver& observer = {});

struct ClassifierResult {
  ModelParams params;  // encoder + classifier
  std::vector<double> loss_trace;
};

/// Supervised training of the classifier head, with the encoder frozen or
/// trainable according to `mode`. `init` must hold the pretrained encoder.*
/// tensors for the ssl_* modes and must be absent otherwise.
ClassifierResult train_classifier(const std::vector<LabeledClip>& labeled, TrainMode mode,
                                  const ModelParams* init, const TrainConfig& train,
                                  const AugmentationConfig& augmentation, const EncoderConfig& encoder,
                                  const HeadConfig& heads);

struct EvalScores {
  std::vector<double> scores;  // probability of class 1
  std::vector<int> labels;
};

/// Center window, no augmentation. Clips are scored in consecutive batches of
/// `batch_size` in the given order, so normalization sees batch statistics
/// as it does in training.
EvalScores evaluate_model(const ModelParams& params, const EncoderConfig& encoder,
                          const std::vector<LabeledClip>& clips, std::int64_t window_length,
                          std::int64_t batch_size);

void write_loss_trace(std::ostream& out, const std::vector<double>& trace);

}  // namespace stssl
