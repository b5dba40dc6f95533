// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "stssl/random.hpp"
#include "stssl/videodata.hpp"

namespace stssl {

/// Parameters of the 2D+time augmentation pipeline. Spatial ranges are
/// symmetric half-widths; intensity jitter factors are drawn from
/// [1 - brightness, 1 + brightness] and [1 - contrast, 1 + contrast].
struct AugmentationConfig {
  double scale_range = 0.20;
  double translation_range = 0.10;  // fraction of frame width / height
  double rotation_range = 10.0;     // degrees
  double hflip_prob = 0.5;
  double brightness = 0.3;
  double contrast = 0.3;
  double noise_std = 0.03;
  double erase_prob = 0.5;
  std::pair<double, double> erase_area{0.02, 0.10};
  std::pair<double, double> erase_aspect{0.3, 3.3};
  double reverse_prob = 0.5;
  double shuffle_prob = 0.5;
  std::int64_t shuffle_max_frames = 4;
  double replace_prob = 0.5;
  std::int64_t replace_max_frames = 4;
  bool temporal_enabled = true;
};

struct EraseRect {
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool operator==(const EraseRect&) const = default;
};

/// One concrete draw of every augmentation parameter.
struct AugmentationPlan {
  double scale = 1.0;
  double tx = 0.0;
  double ty = 0.0;
  double rotation = 0.0;  // degrees
  bool do_hflip = false;
  double brightness_factor = 1.0;
  double contrast_factor = 1.0;
  std::uint64_t noise_seed = 0;
  double noise_std = 0.0;
  std::optional<EraseRect> erase_rect;
  bool do_reverse = false;
  std::vector<std::int64_t> shuffle_indices;  // output frame t <- input frame shuffle_indices[t]
  std::vector<std::pair<std::int64_t, std::int64_t>> replace_map;  // (dest, src)

  static AugmentationPlan identity(std::int64_t frames);
};

/// Draws a plan for clips of `frames` x `height` x `width`.
AugmentationPlan draw_augmentation(const AugmentationConfig& config, std::int64_t frames, std::int64_t height,
                                   std::int64_t width, Rng& rng);

VideoClip apply_affine(const VideoClip& clip, double scale, double tx, double ty, double rotation_deg);
VideoClip apply_hflip(const VideoClip& clip);
VideoClip apply_intensity(const VideoClip& clip, double brightness_factor, double contrast_factor,
                          std::uint64_t noise_seed, double noise_std);
VideoClip apply_erasing(const VideoClip& clip, const std::optional<EraseRect>& rect);
VideoClip apply_temporal(const VideoClip& clip, bool do_reverse, const std::vector<std::int64_t>& shuffle_indices,
                         const std::vector<std::pair<std::int64_t, std::int64_t>>& replace_map);

/// affine -> horizontal flip -> intensity -> erasing -> temporal.
VideoClip apply_plan(const VideoClip& clip, const AugmentationPlan& plan);

}  // namespace stssl
