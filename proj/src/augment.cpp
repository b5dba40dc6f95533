// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stssl/errors.hpp"

namespace stssl {

namespace {

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

std::vector<std::int64_t> iota(std::int64_t n) {
  std::vector<std::int64_t> v(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

std::optional<EraseRect> draw_erase_rect(const AugmentationConfig& cfg, std::int64_t h, std::int64_t w, Rng& rng) {
  const double frame_area = static_cast<double>(h * w);
  const auto [area_lo, area_hi] = cfg.erase_area;
  const auto [aspect_lo, aspect_hi] = cfg.erase_aspect;
  if (area_hi <= 0.0 || aspect_lo <= 0.0) return std::nullopt;
  const double log_lo = std::log(aspect_lo);
  const double log_hi = std::log(aspect_hi);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double target = rng.uniform(area_lo, area_hi) * frame_area;
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));  // h / w
    const auto eh = static_cast<std::int64_t>(std::lround(std::sqrt(target * aspect)));
    const auto ew = static_cast<std::int64_t>(std::lround(std::sqrt(target / aspect)));
    if (eh < 1 || ew < 1 || eh >= h || ew >= w) continue;
    // rounding can leave the drawn ranges; only exact-range rectangles are kept
    const double area = static_cast<double>(eh * ew) / frame_area;
    const double ratio = static_cast<double>(eh) / static_cast<double>(ew);
    if (area < area_lo || area > area_hi || ratio < aspect_lo || ratio > aspect_hi) continue;
    const auto y0 = rng.uniform_int(0, h - eh);
    const auto x0 = rng.uniform_int(0, w - ew);
    return EraseRect{x0, y0, x0 + ew, y0 + eh};
  }
  return std::nullopt;
}

// k positions drawn without replacement, permuted among themselves.
std::vector<std::int64_t> draw_shuffle(std::int64_t frames, std::int64_t k, Rng& rng) {
  auto perm = iota(frames);
  k = std::min(k, frames);
  if (k < 2) return perm;
  auto positions = rng.permutation(frames);
  positions.resize(static_cast<std::size_t>(k));
  auto sources = positions;
  rng.shuffle(sources);
  for (std::size_t i = 0; i < positions.size(); ++i) perm[static_cast<std::size_t>(positions[i])] = sources[i];
  return perm;
}

std::vector<std::pair<std::int64_t, std::int64_t>> draw_replacements(std::int64_t frames, std::int64_t k, Rng& rng) {
  std::vector<std::pair<std::int64_t, std::int64_t>> map;
  if (frames < 2) return map;
  k = std::min(k, frames);
  auto dests = rng.permutation(frames);
  for (std::int64_t i = 0; i < k; ++i) {
    const auto dest = dests[static_cast<std::size_t>(i)];
    auto src = rng.uniform_int(0, frames - 2);
    if (src >= dest) ++src;
    map.emplace_back(dest, src);
  }
  return map;
}

}  // namespace

AugmentationPlan AugmentationPlan::identity(std::int64_t frames) {
  AugmentationPlan plan;
  plan.shuffle_indices = iota(frames);
  return plan;
}

AugmentationPlan draw_augmentation(const AugmentationConfig& cfg, std::int64_t frames, std::int64_t height,
                                   std::int64_t width, Rng& rng) {
  if (frames < 1) throw InputError("draw_augmentation needs T >= 1");
  AugmentationPlan plan = AugmentationPlan::identity(frames);
  plan.scale = 1.0 + rng.uniform(-cfg.scale_range, cfg.scale_range);
  plan.tx = rng.uniform(-cfg.translation_range, cfg.translation_range);
  plan.ty = rng.uniform(-cfg.translation_range, cfg.translation_range);
  plan.rotation = rng.uniform(-cfg.rotation_range, cfg.rotation_range);
  plan.do_hflip = rng.bernoulli(cfg.hflip_prob);
  plan.brightness_factor = 1.0 + rng.uniform(-cfg.brightness, cfg.brightness);
  plan.contrast_factor = 1.0 + rng.uniform(-cfg.contrast, cfg.contrast);
  plan.noise_seed = rng.next();
  plan.noise_std = cfg.noise_std;
  if (rng.bernoulli(cfg.erase_prob)) plan.erase_rect = draw_erase_rect(cfg, height, width, rng);

  // temporal draws are always consumed so spatial parameters of later plans
  // do not depend on the temporal switch
  const bool reverse = rng.bernoulli(cfg.reverse_prob);
  const bool shuffle = rng.bernoulli(cfg.shuffle_prob);
  const auto shuffle_k = rng.uniform_int(0, cfg.shuffle_max_frames);
  Rng shuffle_rng(rng.next());
  const bool replace = rng.bernoulli(cfg.replace_prob);
  const auto replace_k = rng.uniform_int(0, cfg.replace_max_frames);
  Rng replace_rng(rng.next());
  if (cfg.temporal_enabled) {
    plan.do_reverse = reverse;
    if (shuffle) plan.shuffle_indices = draw_shuffle(frames, shuffle_k, shuffle_rng);
    if (replace) plan.replace_map = draw_replacements(frames, replace_k, replace_rng);
  }
  return plan;
}

VideoClip apply_affine(const VideoClip& clip, double scale, double tx, double ty, double rotation_deg) {
  if (scale == 1.0 && tx == 0.0 && ty == 0.0 && rotation_deg == 0.0) return clip;
  VideoClip out(clip.frames, clip.height, clip.width);
  out.frame_rate = clip.frame_rate;
  const double theta = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cx = 0.5 * static_cast<double>(clip.width - 1);
  const double cy = 0.5 * static_cast<double>(clip.height - 1);
  const double shift_x = tx * static_cast<double>(clip.width);
  const double shift_y = ty * static_cast<double>(clip.height);
  const auto h = clip.height;
  const auto w = clip.width;

  // inverse map: input = R^-1 S^-1 (output - center - shift) + center
#pragma omp parallel for
  for (std::int64_t t = 0; t < clip.frames; ++t) {
    auto src = clip.frame(t);
    auto dst = out.frame(t);
    auto sample = [&](std::int64_t yy, std::int64_t xx) -> double {
      if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
      return src[static_cast<std::size_t>(yy * w + xx)];
    };
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) - cx - shift_x;
        const double dy = static_cast<double>(y) - cy - shift_y;
        const double sx = (c * dx + s * dy) / scale + cx;
        const double sy = (-s * dx + c * dy) / scale + cy;
        const double fx = std::floor(sx);
        const double fy = std::floor(sy);
        const auto x0 = static_cast<std::int64_t>(fx);
        const auto y0 = static_cast<std::int64_t>(fy);
        const double ax = sx - fx;
        const double ay = sy - fy;
        const double v = (1 - ay) * ((1 - ax) * sample(y0, x0) + ax * sample(y0, x0 + 1)) +
                         ay * ((1 - ax) * sample(y0 + 1, x0) + ax * sample(y0 + 1, x0 + 1));
        dst[static_cast<std::size_t>(y * w + x)] = clamp01(v);
      }
    }
  }
  return out;
}

VideoClip apply_hflip(const VideoClip& clip) {
  VideoClip out = clip;
  for (std::int64_t t = 0; t < clip.frames; ++t) {
    for (std::int64_t y = 0; y < clip.height; ++y) {
      auto row = out.frame(t).subspan(static_cast<std::size_t>(y * clip.width), static_cast<std::size_t>(clip.width));
      std::reverse(row.begin(), row.end());
    }
  }
  return out;
}

VideoClip apply_intensity(const VideoClip& clip, double brightness_factor, double contrast_factor,
                          std::uint64_t noise_seed, double noise_std) {
  VideoClip out = clip;
  auto& px = out.pixels;
  if (brightness_factor != 1.0) {
    for (auto& p : px) p = clamp01(brightness_factor * static_cast<double>(p));
  }
  if (contrast_factor != 1.0) {
    double sum = 0.0;
    for (float p : px) sum += p;
    const double mean = px.empty() ? 0.0 : sum / static_cast<double>(px.size());
    for (auto& p : px) p = clamp01(mean + contrast_factor * (static_cast<double>(p) - mean));
  }
  if (noise_std > 0.0) {
    Rng rng(noise_seed);
    for (auto& p : px) p = clamp01(static_cast<double>(p) + noise_std * rng.normal());
  }
  return out;
}

VideoClip apply_erasing(const VideoClip& clip, const std::optional<EraseRect>& rect) {
  if (!rect) return clip;
  const auto r = *rect;
  if (r.x0 < 0 || r.y0 < 0 || r.x1 > clip.width || r.y1 > clip.height || r.x0 >= r.x1 || r.y0 >= r.y1) {
    throw InputError("erase rectangle outside frame bounds");
  }
  VideoClip out = clip;
  for (std::int64_t t = 0; t < clip.frames; ++t) {
    for (std::int64_t y = r.y0; y < r.y1; ++y) {
      for (std::int64_t x = r.x0; x < r.x1; ++x) out.at(t, y, x) = 0.0f;
    }
  }
  return out;
}

VideoClip apply_temporal(const VideoClip& clip, bool do_reverse, const std::vector<std::int64_t>& shuffle_indices,
                         const std::vector<std::pair<std::int64_t, std::int64_t>>& replace_map) {
  const auto n = clip.frames;
  if (!shuffle_indices.empty()) {
    if (static_cast<std::int64_t>(shuffle_indices.size()) != n) throw InputError("shuffle permutation length != T");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (auto i : shuffle_indices) {
      if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]) throw InputError("shuffle indices are not a permutation");
      seen[static_cast<std::size_t>(i)] = true;
    }
  }
  for (auto [dest, src] : replace_map) {
    if (dest < 0 || dest >= n || src < 0 || src >= n) throw InputError("frame replacement index out of range");
  }

  VideoClip out = clip;
  const auto fs = static_cast<std::size_t>(clip.frame_size());
  auto copy_frame = [fs](const VideoClip& from, std::int64_t src, VideoClip& to, std::int64_t dst) {
    std::copy_n(from.pixels.begin() + static_cast<std::ptrdiff_t>(src * static_cast<std::int64_t>(fs)), fs,
                to.pixels.begin() + static_cast<std::ptrdiff_t>(dst * static_cast<std::int64_t>(fs)));
  };
  if (do_reverse) {
    for (std::int64_t t = 0; t < n; ++t) copy_frame(clip, n - 1 - t, out, t);
  }
  if (!shuffle_indices.empty()) {
    const VideoClip before = out;
    for (std::int64_t t = 0; t < n; ++t) copy_frame(before, shuffle_indices[static_cast<std::size_t>(t)], out, t);
  }
  for (auto [dest, src] : replace_map) {
    if (dest != src) copy_frame(out, src, out, dest);
  }
  return out;
}

VideoClip apply_plan(const VideoClip& clip, const AugmentationPlan& plan) {
  VideoClip v = apply_affine(clip, plan.scale, plan.tx, plan.ty, plan.rotation);
  if (plan.do_hflip) v = apply_hflip(v);
  v = apply_intensity(v, plan.brightness_factor, plan.contrast_factor, plan.noise_seed, plan.noise_std);
  v = apply_erasing(v, plan.erase_rect);
  return apply_temporal(v, plan.do_reverse, plan.shuffle_indices, plan.replace_map);
}

}  // namespace stssl
