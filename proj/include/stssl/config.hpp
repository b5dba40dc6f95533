// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stssl/augment.hpp"
#include "stssl/model.hpp"
#include "stssl/saliency.hpp"
#include "stssl/trainer.hpp"
#include "stssl/videodata.hpp"

namespace stssl {

/// Either a synthetic dataset description or a dataset directory.
struct DatasetSource {
  std::optional<SynthConfig> synthetic = SynthConfig{};
  std::uint64_t data_seed = 7;  // generation and patient-level split
  std::string directory;
  SplitRatios split;
};

struct ExperimentConfig {
  DatasetSource dataset;
  TrainConfig train;
  AugmentationConfig augmentation;
  EncoderConfig encoder;
  HeadConfig heads;
  std::vector<double> fractions{1.0, 0.5, 0.3, 0.2, 0.1, 0.05};
  std::vector<TrainMode> regimes{TrainMode::kFullySupervised, TrainMode::kSslFeatureExtractor,
                                 TrainMode::kSslFineTuned, TrainMode::kRandomFeatureExtractor};
  std::vector<std::uint64_t> seeds{0};
  OcclusionConfig occlusion;
  /// Test positives scored for weighted IOU in each sweep run; 0 leaves the
  /// column empty.
  std::int64_t saliency_clips = 0;
  /// Labeled fraction used by the temporal ablation; defaults to the smallest.
  std::optional<double> ablation_fraction;

  void validate() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);
void to_json(nlohmann::json& j, const AugmentationConfig& c);
void from_json(const nlohmann::json& j, AugmentationConfig& c);
void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const HeadConfig& c);
void from_json(const nlohmann::json& j, HeadConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const OcclusionConfig& c);
void from_json(const nlohmann::json& j, OcclusionConfig& c);

}  // namespace stssl
