// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stssl/config.hpp"
#include "stssl/metrics.hpp"
#include "stssl/saliency.hpp"
#include "stssl/videodata.hpp"

namespace stssl {

struct ExperimentResult {
  TrainMode regime = TrainMode::kFullySupervised;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double auc = 0.0;
  std::optional<double> weighted_iou;
  std::int64_t trainable_params = 0;
  std::int64_t total_params = 0;
  /// params_digest of the pretrained encoder the run started from; 0 when
  /// the regime does not use pretraining.
  std::uint64_t init_digest = 0;
  std::int64_t n_train = 0;
};

/// Generates (and splits by source) or loads the configured dataset.
DatasetManifest prepare_dataset(const ExperimentConfig& config);

/// For each seed, pretrains once if any regime needs it, then trains and
/// evaluates every (fraction, regime) pair on nested label subsets. Rows come
/// out ordered by seed, fraction and regime as listed in the config. Errors
/// are rethrown with the failing (seed, fraction, regime).
std::vector<ExperimentResult> run_fraction_sweep(const ExperimentConfig& config, const DatasetManifest& data);

inline constexpr const char* kResultsHeader =
    "regime,fraction,seed,accuracy,sensitivity,specificity,auc,weighted_iou,trainable_params,total_params";

void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& rows);

struct AblationResult {
  ExperimentResult with_temporal;
  ExperimentResult without_temporal;
  double auc_difference = 0.0;  // with - without
};

/// Pretrains twice, differing only in temporal augmentation, then trains
/// the first SSL regime of the config at the ablation fraction on the first
/// seed.
AblationResult run_ablation_temporal(const ExperimentConfig& config, const DatasetManifest& data);

/// CSV with a leading temporal_aug column followed by the results columns.
void write_ablation_csv(std::ostream& out, const AblationResult& result);

struct ClipSaliency {
  std::string clip_id;
  double weighted_iou = 0.0;
  std::vector<PredBox> boxes;
};

struct SaliencyEvalResult {
  double mean_weighted_iou = 0.0;
  std::vector<ClipSaliency> clips;
  std::int64_t skipped = 0;  // positives without ground-truth boxes
  std::vector<SaliencyMap> maps;  // filled only when requested
};

/// Builds the scorer used for one clip; receives the clip as stored.
using ScorerFactory = std::function<Scorer(const LabeledClip&)>;

/// Saliency -> per-frame top-fraction mask -> boxes -> weighted IOU for every
/// positive clip with boxes. `window_length` selects the centered window that
/// is scored (ground-truth boxes are cropped to it). Throws InputError when no
/// positive clip is given.
SaliencyEvalResult run_saliency_eval(const ScorerFactory& scorer, const std::vector<LabeledClip>& clips,
                                     const OcclusionConfig& occlusion, std::int64_t window_length,
                                     bool keep_maps = false);
/// Model-based variant: each clip is scored together with the first
/// batch_size - 1 other clips of `context_pool`, matching evaluate_model's
/// batched normalization.
SaliencyEvalResult run_saliency_eval(const ModelParams& params, const EncoderConfig& encoder,
                                     const std::vector<LabeledClip>& context_pool,
                                     const std::vector<LabeledClip>& clips, const OcclusionConfig& occlusion,
                                     std::int64_t batch_size, bool keep_maps = false);

/// Every box of the threshold mask of `map`, zero-mass boxes dropped.
std::vector<PredBox> saliency_boxes(const SaliencyMap& map, double top_fraction);

std::string saliency_json(const SaliencyEvalResult& result);
std::string boxes_json(const std::vector<PredBox>& boxes);
void write_saliency_map(const std::filesystem::path& path, const SaliencyMap& map);

}  // namespace stssl
