// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/videodata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "stssl/errors.hpp"

namespace stssl {

VideoClip::VideoClip(std::int64_t t, std::int64_t h, std::int64_t w, float fill)
    : frames(t), height(h), width(w), pixels(static_cast<std::size_t>(t * h * w), fill) {}

void VideoClip::validate() const {
  if (frames < 1 || height < 1 || width < 1) throw InputError("clip must have T, H, W >= 1");
  if (static_cast<std::int64_t>(pixels.size()) != size()) throw InputError("clip pixel buffer does not match its shape");
  for (float v : pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw InputError("clip intensity outside [0, 1]");
  }
}

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnlabeled: return "unlabeled";
  }
  return "unknown";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  if (name == "unlabeled") return Split::kUnlabeled;
  throw InputError("unknown split '" + name + "'");
}

std::vector<LabeledClip> DatasetManifest::labeled_in(Split split) const {
  std::vector<LabeledClip> out;
  for (const auto& c : labeled) {
    if (c.split == split) out.push_back(c);
  }
  return out;
}

std::vector<VideoClip> DatasetManifest::unlabeled_clips() const {
  std::vector<VideoClip> out;
  out.reserve(unlabeled.size());
  for (const auto& u : unlabeled) out.push_back(u.clip);
  return out;
}

namespace {

// Acquisition parameters shared by every clip of one source.
struct SourceStyle {
  double gain;
  double pleura_row;   // as a fraction of height
  double tissue_level;
  double band_level;
  double speckle;
};

SourceStyle draw_style(Rng& rng) {
  SourceStyle s{};
  s.gain = rng.uniform(0.75, 1.0);
  s.pleura_row = rng.uniform(0.16, 0.24);
  s.tissue_level = rng.uniform(0.25, 0.40);
  s.band_level = rng.uniform(0.35, 0.60);
  s.speckle = rng.uniform(0.25, 0.35);
  return s;
}

struct Blob {
  double cx, cy, vx, vy, rx, ry, level;
};

double gauss_row(double y, double center, double width) {
  const double d = (y - center) / width;
  return std::exp(-0.5 * d * d);
}

// Ellipse pixels ((x-cx)/rx)^2 + ((y-cy)/ry)^2 <= 1 and their bounding box.
GroundTruthBox blob_box(const Blob& b, std::int64_t t, std::int64_t h, std::int64_t w) {
  const double cx = b.cx + b.vx * static_cast<double>(t);
  const double cy = b.cy + b.vy * static_cast<double>(t);
  GroundTruthBox box{t, w, h, 0, 0};
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const double dx = (static_cast<double>(x) - cx) / b.rx;
      const double dy = (static_cast<double>(y) - cy) / b.ry;
      if (dx * dx + dy * dy <= 1.0) {
        box.x0 = std::min(box.x0, x);
        box.y0 = std::min(box.y0, y);
        box.x1 = std::max(box.x1, x + 1);
        box.y1 = std::max(box.y1, y + 1);
      }
    }
  }
  return box;
}

Blob draw_blob(Rng& rng, const SynthConfig& cfg, double pleura_px) {
  const double h = static_cast<double>(cfg.height);
  const double w = static_cast<double>(cfg.width);
  const double span = static_cast<double>(cfg.frames - 1);
  Blob b{};
  b.rx = rng.uniform(0.09, 0.14) * w;
  b.ry = rng.uniform(0.08, 0.12) * h;
  b.vx = rng.uniform(-1.0, 1.0);
  b.vy = rng.uniform(-0.5, 0.5);
  b.level = rng.uniform(0.45, 0.70);
  // keep the whole trajectory inside the lung field below the pleura
  const double x_lo = b.rx + 1.0 - std::min(0.0, b.vx * span);
  const double x_hi = w - 2.0 - b.rx - std::max(0.0, b.vx * span);
  const double y_lo = pleura_px + b.ry + 3.0 - std::min(0.0, b.vy * span);
  const double y_hi = h - 2.0 - b.ry - std::max(0.0, b.vy * span);
  b.cx = x_hi > x_lo ? rng.uniform(x_lo, x_hi) : 0.5 * w;
  b.cy = y_hi > y_lo ? rng.uniform(y_lo, y_hi) : 0.5 * (pleura_px + h);
  return b;
}

VideoClip render_clip(const SynthConfig& cfg, const SourceStyle& style, const Blob* blob, Rng& rng) {
  VideoClip clip(cfg.frames, cfg.height, cfg.width);
  clip.frame_rate = cfg.frame_rate;
  const double h = static_cast<double>(cfg.height);
  const double pleura = style.pleura_row * h;
  const double breath_amp = rng.uniform(0.3, 1.2);
  const double breath_phase = rng.uniform(0.0, 6.283185307179586);
  const double breath_rate = rng.uniform(0.25, 0.6);
  const double line_width = std::max(0.8, h / 48.0);

  std::vector<double> profile(static_cast<std::size_t>(cfg.height));
  for (std::int64_t t = 0; t < cfg.frames; ++t) {
    const double shift = breath_amp * std::sin(breath_phase + breath_rate * static_cast<double>(t));
    const double pl = pleura + shift;
    for (std::int64_t y = 0; y < cfg.height; ++y) {
      const double yd = static_cast<double>(y);
      double v = yd < pl ? style.tissue_level : 0.06;
      v += 0.75 * gauss_row(yd, pl, line_width);
      // A-line reverberations at multiples of the pleural depth
      double level = style.band_level;
      for (int k = 2; k * pl < h + 2.0 * line_width; ++k) {
        v += level * gauss_row(yd, k * pl, line_width);
        level *= 0.7;
      }
      profile[static_cast<std::size_t>(y)] = v;
    }
    double bcx = 0, bcy = 0;
    if (blob) {
      bcx = blob->cx + blob->vx * static_cast<double>(t);
      bcy = blob->cy + blob->vy * static_cast<double>(t);
    }
    for (std::int64_t y = 0; y < cfg.height; ++y) {
      for (std::int64_t x = 0; x < cfg.width; ++x) {
        double v = profile[static_cast<std::size_t>(y)];
        if (blob) {
          const double dx = (static_cast<double>(x) - bcx) / blob->rx;
          const double dy = (static_cast<double>(y) - bcy) / blob->ry;
          const double r2 = dx * dx + dy * dy;
          if (r2 <= 1.0) {
            const double weight = std::clamp((1.0 - r2) * 3.0, 0.0, 1.0);
            v = (1.0 - weight) * v + weight * blob->level;
          }
        }
        const double speckle = std::max(0.0, 1.0 + style.speckle * rng.normal());
        clip.at(t, y, x) = static_cast<float>(std::clamp(style.gain * v * speckle, 0.0, 1.0));
      }
    }
  }
  return clip;
}

std::string make_id(char prefix, std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%05lld", prefix, static_cast<long long>(index));
  return buf;
}

std::vector<int> draw_labels(std::int64_t n, double positive_fraction, Rng& rng) {
  const std::int64_t positives = subsample_count(n, positive_fraction);
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 0; i < positives && i < n; ++i) labels[static_cast<std::size_t>(i)] = 1;
  rng.shuffle(labels);
  return labels;
}

}  // namespace

std::int64_t subsample_count(std::int64_t n, double fraction) {
  if (fraction <= 0.0) return 0;
  return static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

DatasetManifest generate_synthetic_dataset(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.n_unlabeled < 0 || cfg.n_labeled < 0 || cfg.sources < 1) {
    throw ConfigError("synthetic config: counts must be >= 0 and sources >= 1");
  }
  if (cfg.frames < 1 || cfg.height < 16 || cfg.width < 16) {
    throw ConfigError("synthetic config: need T >= 1 and H, W >= 16");
  }
  if (cfg.positive_fraction < 0.0 || cfg.positive_fraction > 1.0) {
    throw ConfigError("synthetic config: positive_fraction must lie in [0, 1]");
  }

  std::vector<SourceStyle> labeled_styles, unlabeled_styles;
  for (std::int64_t s = 0; s < cfg.sources; ++s) {
    Rng r1(mix_seed(seed, 0x1000 + static_cast<std::uint64_t>(s)));
    labeled_styles.push_back(draw_style(r1));
    Rng r2(mix_seed(seed, 0x2000000 + static_cast<std::uint64_t>(s)));
    unlabeled_styles.push_back(draw_style(r2));
  }

  DatasetManifest manifest;
  Rng label_rng(mix_seed(seed, 1));
  const auto labels = draw_labels(cfg.n_labeled, cfg.positive_fraction, label_rng);
  const auto pool_labels = draw_labels(cfg.n_unlabeled, cfg.positive_fraction, label_rng);

  manifest.labeled.resize(static_cast<std::size_t>(cfg.n_labeled));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < cfg.n_labeled; ++i) {
    const auto src = i % cfg.sources;
    const auto& style = labeled_styles[static_cast<std::size_t>(src)];
    Rng rng(mix_seed(seed, 0x10000000 + static_cast<std::uint64_t>(i)));
    LabeledClip lc;
    lc.clip_id = make_id('L', i);
    lc.source_id = make_id('P', src);
    lc.label = labels[static_cast<std::size_t>(i)];
    if (lc.label == 1) {
      const Blob blob = draw_blob(rng, cfg, style.pleura_row * static_cast<double>(cfg.height));
      lc.clip = render_clip(cfg, style, &blob, rng);
      for (std::int64_t t = 0; t < cfg.frames; ++t) lc.boxes.push_back(blob_box(blob, t, cfg.height, cfg.width));
    } else {
      lc.clip = render_clip(cfg, style, nullptr, rng);
    }
    manifest.labeled[static_cast<std::size_t>(i)] = std::move(lc);
  }

  manifest.unlabeled.resize(static_cast<std::size_t>(cfg.n_unlabeled));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < cfg.n_unlabeled; ++i) {
    const auto src = i % cfg.sources;
    const auto& style = unlabeled_styles[static_cast<std::size_t>(src)];
    Rng rng(mix_seed(seed, 0x20000000 + static_cast<std::uint64_t>(i)));
    UnlabeledClip uc;
    uc.clip_id = make_id('U', i);
    uc.source_id = make_id('Q', src);
    if (pool_labels[static_cast<std::size_t>(i)] == 1) {
      const Blob blob = draw_blob(rng, cfg, style.pleura_row * static_cast<double>(cfg.height));
      uc.clip = render_clip(cfg, style, &blob, rng);
    } else {
      uc.clip = render_clip(cfg, style, nullptr, rng);
    }
    manifest.unlabeled[static_cast<std::size_t>(i)] = std::move(uc);
  }
  return manifest;
}

VideoClip crop_window(const VideoClip& clip, std::int64_t start, std::int64_t length) {
  if (length < 1 || length > clip.frames) {
    throw InputError("window length " + std::to_string(length) + " exceeds clip length " +
                     std::to_string(clip.frames));
  }
  if (start < 0 || start + length > clip.frames) throw InputError("window offset out of range");
  VideoClip out(length, clip.height, clip.width);
  out.frame_rate = clip.frame_rate;
  const auto fs = clip.frame_size();
  std::copy_n(clip.pixels.begin() + start * fs, length * fs, out.pixels.begin());
  return out;
}

std::vector<GroundTruthBox> crop_boxes(const std::vector<GroundTruthBox>& boxes, std::int64_t start,
                                       std::int64_t length) {
  std::vector<GroundTruthBox> out;
  for (auto b : boxes) {
    if (b.frame_index >= start && b.frame_index < start + length) {
      b.frame_index -= start;
      out.push_back(b);
    }
  }
  return out;
}

VideoClip sample_window(const VideoClip& clip, std::int64_t length, Rng& rng) {
  if (length < 1 || length > clip.frames) {
    throw InputError("window length " + std::to_string(length) + " exceeds clip length " +
                     std::to_string(clip.frames));
  }
  const auto offset = rng.uniform_int(0, clip.frames - length);
  return crop_window(clip, offset, length);
}

std::int64_t center_offset(std::int64_t frames, std::int64_t length) { return (frames - length) / 2; }

DatasetManifest split_by_source(DatasetManifest manifest, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train <= 0.0 || ratios.val <= 0.0 || ratios.test <= 0.0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be positive and sum to 1");
  }
  std::set<std::string> unique;
  for (const auto& c : manifest.labeled) unique.insert(c.source_id);
  std::vector<std::string> sources(unique.begin(), unique.end());
  if (sources.size() < 3) throw ConfigError("patient-level split needs at least 3 sources");

  Rng rng(seed);
  rng.shuffle(sources);
  const auto n = static_cast<std::int64_t>(sources.size());
  auto boundary = [n](double cumulative) {
    return static_cast<std::int64_t>(std::floor(cumulative * static_cast<double>(n) + 0.5));
  };
  const auto train_end = std::clamp<std::int64_t>(boundary(ratios.train), 1, n - 2);
  const auto val_end = std::clamp<std::int64_t>(boundary(ratios.train + ratios.val), train_end + 1, n - 1);

  std::map<std::string, Split> assignment;
  for (std::int64_t i = 0; i < n; ++i) {
    const Split s = i < train_end ? Split::kTrain : (i < val_end ? Split::kVal : Split::kTest);
    assignment[sources[static_cast<std::size_t>(i)]] = s;
  }
  for (auto& c : manifest.labeled) c.split = assignment.at(c.source_id);
  return manifest;
}

std::vector<LabeledClip> subsample_fraction(const std::vector<LabeledClip>& train, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  if (fraction == 1.0) return train;
  const auto n = static_cast<std::int64_t>(train.size());
  const auto count = subsample_count(n, fraction);
  if (count == 0) throw ConfigError("fraction " + std::to_string(fraction) + " of " + std::to_string(n) +
                                    " clips selects no clips");
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  std::vector<LabeledClip> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) out.push_back(train[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
  return out;
}

}  // namespace stssl
