// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stssl/random.hpp"

namespace stssl {

/// T x H x W grayscale intensity volume, values in [0, 1], frame-major.
struct VideoClip {
  std::int64_t frames = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> pixels;
  double frame_rate = 20.0;  // metadata only

  VideoClip() = default;
  VideoClip(std::int64_t t, std::int64_t h, std::int64_t w, float fill = 0.0f);

  std::int64_t frame_size() const noexcept { return height * width; }
  std::int64_t size() const noexcept { return frames * height * width; }

  float& at(std::int64_t t, std::int64_t y, std::int64_t x) { return pixels[index(t, y, x)]; }
  float at(std::int64_t t, std::int64_t y, std::int64_t x) const { return pixels[index(t, y, x)]; }

  std::span<float> frame(std::int64_t t) {
    return std::span<float>(pixels).subspan(static_cast<std::size_t>(t * frame_size()),
                                            static_cast<std::size_t>(frame_size()));
  }
  std::span<const float> frame(std::int64_t t) const {
    return std::span<const float>(pixels).subspan(static_cast<std::size_t>(t * frame_size()),
                                                  static_cast<std::size_t>(frame_size()));
  }

  bool same_shape(const VideoClip& other) const noexcept {
    return frames == other.frames && height == other.height && width == other.width;
  }

  /// Throws InputError unless T >= 1, the pixel buffer matches the shape and
  /// every value lies in [0, 1].
  void validate() const;

  bool operator==(const VideoClip& other) const {
    return same_shape(other) && pixels == other.pixels;
  }

 private:
  std::size_t index(std::int64_t t, std::int64_t y, std::int64_t x) const noexcept {
    return static_cast<std::size_t>((t * height + y) * width + x);
  }
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1) on one frame.
struct GroundTruthBox {
  std::int64_t frame_index = 0;
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  std::int64_t area() const noexcept { return (x1 - x0) * (y1 - y0); }
  bool operator==(const GroundTruthBox&) const = default;
};

enum class Split { kTrain, kVal, kTest, kUnlabeled };

const char* split_name(Split split);
Split parse_split(const std::string& name);

struct LabeledClip {
  std::string clip_id;
  std::string source_id;
  VideoClip clip;
  int label = 0;  // 0 = no consolidation, 1 = consolidation
  std::vector<GroundTruthBox> boxes;
  Split split = Split::kTrain;
};

struct UnlabeledClip {
  std::string clip_id;
  std::string source_id;
  VideoClip clip;
};

struct DatasetManifest {
  std::vector<LabeledClip> labeled;
  std::vector<UnlabeledClip> unlabeled;

  std::vector<LabeledClip> labeled_in(Split split) const;
  std::vector<VideoClip> unlabeled_clips() const;
};

struct SynthConfig {
  std::int64_t n_unlabeled = 500;
  std::int64_t n_labeled = 300;
  std::int64_t sources = 60;
  std::int64_t frames = 16;
  std::int64_t height = 64;
  std::int64_t width = 64;
  double positive_fraction = 0.5;
  double frame_rate = 20.0;
};

/// Builds an ultrasound-like dataset: every clip has a pleural line, drifting
/// horizontal reverberation bands and multiplicative speckle; positives also
/// carry one bright elliptical blob moving at most 2 px per frame, with a
/// per-frame ground-truth box equal to its bounding rectangle. Clips of the
/// same source share acquisition parameters (gain, depth, band spacing).
/// Labeled clips are all assigned to Split::kTrain; use split_by_source.
DatasetManifest generate_synthetic_dataset(const SynthConfig& config, std::uint64_t seed);

/// `length` consecutive frames starting at a uniformly drawn offset.
VideoClip sample_window(const VideoClip& clip, std::int64_t length, Rng& rng);

/// Window starting at offset `start`; boxes outside the window are dropped and
/// the rest re-indexed.
VideoClip crop_window(const VideoClip& clip, std::int64_t start, std::int64_t length);
std::vector<GroundTruthBox> crop_boxes(const std::vector<GroundTruthBox>& boxes, std::int64_t start,
                                       std::int64_t length);

/// Deterministic center window used for evaluation.
std::int64_t center_offset(std::int64_t frames, std::int64_t length);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Shuffles source ids with the seed, then partitions them by cumulative
/// ratio. Every clip inherits its source's split.
DatasetManifest split_by_source(DatasetManifest manifest, const SplitRatios& ratios, std::uint64_t seed);

/// round_half_up(fraction * n) clips drawn without replacement. The draw is a
/// seeded permutation prefix, so for a fixed seed smaller fractions select
/// subsets of larger ones. fraction == 1 returns the input unchanged.
std::vector<LabeledClip> subsample_fraction(const std::vector<LabeledClip>& train, double fraction,
                                            std::uint64_t seed);

std::int64_t subsample_count(std::int64_t n, double fraction);

/// Directory format: manifest.json plus one little-endian float32 file per
/// clip named <clip_id>.f32, frame-major.
void save_dataset(const DatasetManifest& manifest, const std::filesystem::path& dir);
DatasetManifest load_dataset(const std::filesystem::path& dir);

/// Raw float32 volume helpers shared by clips and saliency maps.
void write_f32(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32(const std::filesystem::path& path, std::size_t expected_count);

}  // namespace stssl
