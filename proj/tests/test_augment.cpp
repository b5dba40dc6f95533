// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stssl/augment.hpp"
#include "stssl/errors.hpp"
#include "test_util.hpp"

using namespace stssl;

namespace {

AugmentationConfig zero_config() {
  AugmentationConfig c;
  c.scale_range = c.translation_range = c.rotation_range = 0.0;
  c.hflip_prob = c.erase_prob = c.reverse_prob = c.shuffle_prob = c.replace_prob = 0.0;
  c.brightness = c.contrast = c.noise_std = 0.0;
  return c;
}

bool frames_identical(const VideoClip& c) {
  for (std::int64_t t = 1; t < c.frames; ++t)
    if (!std::equal(c.frame(t).begin(), c.frame(t).end(), c.frame(0).begin())) return false;
  return true;
}

VideoClip repeated_frame_clip(std::int64_t t, std::int64_t h, std::int64_t w, std::uint64_t seed) {
  const auto one = testutil::random_clip(1, h, w, seed);
  VideoClip c(t, h, w);
  for (std::int64_t f = 0; f < t; ++f) std::copy(one.pixels.begin(), one.pixels.end(), c.frame(f).begin());
  return c;
}

}  // namespace

TEST_CASE("degenerate config draws the identity plan") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto plan = draw_augmentation(zero_config(), 8, 32, 32, rng);
    CHECK(plan.scale == 1.0);
    CHECK(plan.tx == 0.0);
    CHECK(plan.ty == 0.0);
    CHECK(plan.rotation == 0.0);
    CHECK_FALSE(plan.do_hflip);
    CHECK(plan.brightness_factor == 1.0);
    CHECK(plan.contrast_factor == 1.0);
    CHECK(plan.noise_std == 0.0);
    CHECK_FALSE(plan.erase_rect.has_value());
    CHECK_FALSE(plan.do_reverse);
    CHECK(plan.replace_map.empty());
    for (std::int64_t t = 0; t < 8; ++t) CHECK(plan.shuffle_indices[static_cast<std::size_t>(t)] == t);
  }
}

TEST_CASE("default draws respect every configured range") {
  const AugmentationConfig cfg;
  Rng rng(2024);
  int flips = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto p = draw_augmentation(cfg, 16, 64, 64, rng);
    CHECK(p.scale >= 0.8);
    CHECK(p.scale <= 1.2);
    CHECK(std::abs(p.tx) <= 0.1);
    CHECK(std::abs(p.ty) <= 0.1);
    CHECK(std::abs(p.rotation) <= 10.0);
    CHECK(p.brightness_factor >= 0.7);
    CHECK(p.brightness_factor <= 1.3);
    CHECK(p.contrast_factor >= 0.7);
    CHECK(p.contrast_factor <= 1.3);
    CHECK(p.noise_std == doctest::Approx(0.03));
    flips += p.do_hflip;
    if (p.erase_rect) {
      const auto& r = *p.erase_rect;
      const auto area = (r.x1 - r.x0) * (r.y1 - r.y0);
      CHECK(area >= 82);
      CHECK(area <= 409);
      const double aspect = static_cast<double>(r.y1 - r.y0) / static_cast<double>(r.x1 - r.x0);
      CHECK(aspect >= 0.3);
      CHECK(aspect <= 3.3);
      CHECK(r.x0 >= 0);
      CHECK(r.y0 >= 0);
      CHECK(r.x1 <= 64);
      CHECK(r.y1 <= 64);
    }
    std::vector<std::int64_t> sorted = p.shuffle_indices;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::int64_t> iota(16);
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(sorted == iota);
    std::int64_t moved = 0;
    for (std::int64_t t = 0; t < 16; ++t) moved += p.shuffle_indices[static_cast<std::size_t>(t)] != t;
    CHECK(moved <= 4);
    CHECK(p.replace_map.size() <= 4);
    for (const auto& [dest, src] : p.replace_map) {
      CHECK(dest != src);
      CHECK(dest >= 0);
      CHECK(dest < 16);
      CHECK(src >= 0);
      CHECK(src < 16);
    }
  }
  const double freq = static_cast<double>(flips) / n;
  CHECK(freq >= 0.47);
  CHECK(freq <= 0.53);
}

TEST_CASE("disabled temporal group yields identity temporal fields") {
  AugmentationConfig cfg;
  cfg.temporal_enabled = false;
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto p = draw_augmentation(cfg, 16, 64, 64, rng);
    CHECK_FALSE(p.do_reverse);
    CHECK(p.replace_map.empty());
    for (std::int64_t t = 0; t < 16; ++t) CHECK(p.shuffle_indices[static_cast<std::size_t>(t)] == t);
  }
}

TEST_CASE("temporal switch leaves the spatial draws unchanged") {
  AugmentationConfig on, off;
  off.temporal_enabled = false;
  Rng a(8), b(8);
  for (int i = 0; i < 50; ++i) {
    const auto pa = draw_augmentation(on, 16, 64, 64, a);
    const auto pb = draw_augmentation(off, 16, 64, 64, b);
    CHECK(pa.scale == pb.scale);
    CHECK(pa.rotation == pb.rotation);
    CHECK(pa.noise_seed == pb.noise_seed);
    CHECK(pa.erase_rect == pb.erase_rect);
  }
}

TEST_CASE("affine") {
  const auto clip = testutil::random_clip(3, 8, 8, 1);
  CHECK(apply_affine(clip, 1.0, 0.0, 0.0, 0.0) == clip);

  VideoClip dot(1, 4, 4);
  dot.at(0, 1, 1) = 1.0f;
  const auto moved = apply_affine(dot, 1.0, 0.25, 0.0, 0.0);
  CHECK(moved.at(0, 1, 2) == doctest::Approx(1.0f));
  CHECK(moved.at(0, 1, 1) == doctest::Approx(0.0f));

  VideoClip flat(2, 16, 16, 0.5f);
  const auto zoomed = apply_affine(flat, 1.2, 0.0, 0.0, 0.0);
  for (std::int64_t y = 3; y < 13; ++y)
    for (std::int64_t x = 3; x < 13; ++x) CHECK(zoomed.at(1, y, x) == doctest::Approx(0.5f));

  const auto rotated = apply_affine(clip, 0.9, 0.05, -0.05, 7.0);
  CHECK(rotated.same_shape(clip));
  CHECK_NOTHROW(rotated.validate());
}

TEST_CASE("spatial ops treat every frame identically") {
  const auto c = repeated_frame_clip(5, 12, 12, 4);
  CHECK(frames_identical(apply_affine(c, 1.1, 0.07, -0.03, 8.0)));
  CHECK(frames_identical(apply_hflip(c)));
  CHECK(frames_identical(apply_erasing(c, EraseRect{2, 3, 6, 9})));
}

TEST_CASE("flip is an involution") {
  const auto clip = testutil::random_clip(3, 7, 9, 2);
  CHECK(apply_hflip(apply_hflip(clip)) == clip);
  CHECK(apply_hflip(clip).at(1, 2, 0) == clip.at(1, 2, 8));

  auto plan = AugmentationPlan::identity(3);
  plan.do_hflip = true;
  CHECK(apply_plan(apply_plan(clip, plan), plan) == clip);
}

TEST_CASE("intensity") {
  const auto clip = testutil::random_clip(2, 6, 6, 3);
  CHECK(apply_intensity(clip, 1.0, 1.0, 7, 0.0) == clip);

  VideoClip half(2, 4, 4, 0.5f);
  for (float v : apply_intensity(half, 1.2, 1.0, 7, 0.0).pixels) CHECK(v == doctest::Approx(0.6f));

  VideoClip mid(4, 64, 64, 0.5f);
  const auto noisy = apply_intensity(mid, 1.0, 1.0, 99, 0.03);
  double sum = 0.0, sq = 0.0;
  for (float v : noisy.pixels) {
    sum += v - 0.5;
    sq += (v - 0.5) * (v - 0.5);
  }
  const double n = static_cast<double>(noisy.pixels.size());
  const double sd = std::sqrt((sq - sum * sum / n) / (n - 1));
  CHECK(sd >= 0.027);
  CHECK(sd <= 0.033);

  // contrast pivots on the mean of the brightness-adjusted clip
  VideoClip two(1, 1, 2);
  two.pixels = {0.2f, 0.6f};
  const auto c = apply_intensity(two, 1.0, 1.25, 0, 0.0);
  CHECK(c.pixels[0] == doctest::Approx(0.15f));
  CHECK(c.pixels[1] == doctest::Approx(0.65f));
}

TEST_CASE("erasing") {
  VideoClip c(3, 64, 64, 0.7f);
  CHECK(apply_erasing(c, std::nullopt) == c);
  const auto e = apply_erasing(c, EraseRect{0, 0, 8, 8});
  for (std::int64_t t = 0; t < 3; ++t) {
    const auto f = e.frame(t);
    CHECK(std::count(f.begin(), f.end(), 0.0f) == 64);
    CHECK(std::count(f.begin(), f.end(), 0.7f) == 4096 - 64);
  }
}

TEST_CASE("temporal ops") {
  const auto clip = testutil::numbered_clip(4, 2, 2);
  const std::vector<std::int64_t> id{0, 1, 2, 3};
  CHECK(apply_temporal(clip, false, id, {}) == clip);

  const auto rev = apply_temporal(clip, true, id, {});
  for (std::int64_t t = 0; t < 4; ++t) CHECK(rev.at(t, 0, 0) == clip.at(3 - t, 0, 0));
  CHECK(apply_temporal(rev, true, id, {}) == clip);

  // reverse, then shuffle, then replace from the current state
  const auto out = apply_temporal(clip, true, {1, 0, 2, 3}, {{3, 0}});
  CHECK(out.at(0, 0, 0) == clip.at(2, 0, 0));
  CHECK(out.at(1, 0, 0) == clip.at(3, 0, 0));
  CHECK(out.at(2, 0, 0) == clip.at(1, 0, 0));
  CHECK(out.at(3, 0, 0) == clip.at(2, 0, 0));

  CHECK_THROWS_AS(apply_temporal(clip, false, {0, 1, 1, 3}, {}), InputError);
  CHECK_THROWS_AS(apply_temporal(clip, false, id, {{4, 0}}), InputError);
}

TEST_CASE("temporal output frames are copies of input frames") {
  const AugmentationConfig cfg;
  Rng rng(12);
  const auto clip = testutil::random_clip(16, 8, 8, 5);
  for (int i = 0; i < 200; ++i) {
    const auto p = draw_augmentation(cfg, 16, 8, 8, rng);
    const auto out = apply_temporal(clip, p.do_reverse, p.shuffle_indices, p.replace_map);
    for (std::int64_t t = 0; t < 16; ++t) {
      bool found = false;
      for (std::int64_t s = 0; s < 16 && !found; ++s)
        found = std::equal(out.frame(t).begin(), out.frame(t).end(), clip.frame(s).begin());
      CHECK(found);
    }
  }
}

TEST_CASE("apply_plan: identity, determinism, shape and range") {
  const auto clip = testutil::random_clip(8, 16, 16, 6);
  CHECK(apply_plan(clip, AugmentationPlan::identity(8)) == clip);
  const AugmentationConfig cfg;
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const auto p = draw_augmentation(cfg, 8, 16, 16, rng);
    const auto a = apply_plan(clip, p);
    CHECK(a == apply_plan(clip, p));
    CHECK(a.same_shape(clip));
    CHECK(std::all_of(a.pixels.begin(), a.pixels.end(), [](float v) { return v >= 0.0f && v <= 1.0f; }));
  }
}
