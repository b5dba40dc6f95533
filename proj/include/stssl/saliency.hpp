// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "stssl/model.hpp"
#include "stssl/videodata.hpp"

namespace stssl {

struct OcclusionConfig {
  std::array<std::int64_t, 3> window{1, 8, 8};  // T, H, W
  std::array<std::int64_t, 3> stride{1, 4, 4};
  double top_fraction = 0.10;
};

/// T x H x W non-negative importance values aligned with a clip.
struct SaliencyMap {
  std::int64_t frames = 0, height = 0, width = 0;
  std::vector<float> values;

  std::span<const float> frame(std::int64_t t) const {
    return std::span<const float>(values).subspan(static_cast<std::size_t>(t * height * width),
                                                  static_cast<std::size_t>(height * width));
  }
};

/// Half-open box with the saliency mass it encloses.
struct PredBox {
  std::int64_t frame_index = 0;
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double mass = 0.0;
};

/// Class score of a clip, e.g. a softmax probability.
using Scorer = std::function<double(const VideoClip&)>;

/// Scores a clip as the first row of a batch completed by `context` clips, so
/// normalization statistics resemble those seen in training. An empty context
/// scores the clip alone. `params` must outlive the scorer.
Scorer model_scorer(const ModelParams& params, const EncoderConfig& encoder, std::int64_t class_index,
                    std::vector<VideoClip> context = {});

/// Window start positions along one axis: a stride grid whose final window is
/// clamped to end at the boundary, so the grid covers every index.
std::vector<std::int64_t> occlusion_positions(std::int64_t extent, std::int64_t window, std::int64_t stride);

/// Occludes each grid window with the clip mean and records the score drop;
/// each voxel receives the mean drop over the windows covering it, clamped
/// below at zero. Windows are evaluated in parallel and accumulated in grid
/// order.
SaliencyMap occlusion_saliency(const Scorer& scorer, const VideoClip& clip, const OcclusionConfig& config);
SaliencyMap occlusion_saliency(const ModelParams& params, const EncoderConfig& encoder, const VideoClip& clip,
                               std::int64_t class_index, const OcclusionConfig& config);

/// Marks exactly ceil(fraction * H * W) pixels per frame, highest values
/// first, ties broken toward the lower row-major index.
std::vector<std::uint8_t> threshold_top_fraction(const SaliencyMap& map, double fraction);

/// 8-connected components of one frame's mask; components under 4 pixels are
/// dropped. Boxes come out in order of each component's first pixel.
std::vector<PredBox> extract_boxes(std::span<const std::uint8_t> mask, std::span<const float> saliency,
                                   std::int64_t height, std::int64_t width, std::int64_t frame_index);

double box_iou(std::int64_t ax0, std::int64_t ay0, std::int64_t ax1, std::int64_t ay1, std::int64_t bx0,
               std::int64_t by0, std::int64_t bx1, std::int64_t by1);
double box_iou(const PredBox& a, const GroundTruthBox& b);

/// Per frame: sum_i w_i * max_j iou(pred_i, gt_j) with w_i = mass_i / sum mass.
/// Frames with ground truth but no prediction (or zero total mass) score 0,
/// frames with predictions but no ground truth score 0, frames with neither
/// are skipped. Returns the mean over scored frames, 0 if none.
double weighted_iou(const std::vector<PredBox>& pred, const std::vector<GroundTruthBox>& gt);

}  // namespace stssl
