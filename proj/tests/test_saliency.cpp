// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stssl/errors.hpp"
#include "stssl/random.hpp"
#include "stssl/saliency.hpp"
#include "test_util.hpp"

using namespace stssl;

namespace {

// Sum of the pixels inside a box, over all frames, divided by the clip size.
Scorer box_sum_scorer(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1) {
  return [=](const VideoClip& c) {
    double s = 0.0;
    for (std::int64_t t = 0; t < c.frames; ++t)
      for (std::int64_t y = y0; y < y1; ++y)
        for (std::int64_t x = x0; x < x1; ++x) s += c.at(t, y, x);
    return s / static_cast<double>(c.size());
  };
}

SaliencyMap map_of(std::int64_t t, std::int64_t h, std::int64_t w, std::vector<float> v) {
  return SaliencyMap{t, h, w, std::move(v)};
}

std::int64_t count_marked(const std::vector<std::uint8_t>& m, std::int64_t from, std::int64_t n) {
  return std::count(m.begin() + from, m.begin() + from + n, std::uint8_t{1});
}

}  // namespace

TEST_CASE("occlusion positions cover the extent") {
  CHECK(occlusion_positions(16, 8, 4) == std::vector<std::int64_t>{0, 4, 8});
  CHECK(occlusion_positions(10, 8, 4) == std::vector<std::int64_t>{0, 2});
  CHECK(occlusion_positions(8, 8, 4) == std::vector<std::int64_t>{0});
  CHECK(occlusion_positions(5, 1, 1).size() == 5);
}

TEST_CASE("constant scorer gives an all-zero map") {
  const auto clip = testutil::random_clip(3, 16, 16, 1);
  const auto map = occlusion_saliency([](const VideoClip&) { return 0.7; }, clip, OcclusionConfig{});
  CHECK(map.values.size() == static_cast<std::size_t>(clip.size()));
  CHECK(std::all_of(map.values.begin(), map.values.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("windows outside the scored region contribute nothing") {
  // region occupies the top-left 8x8 block; with window 8 and stride 8 the
  // other three windows never touch it
  VideoClip clip(1, 16, 16, 0.0f);
  for (std::int64_t y = 0; y < 8; ++y)
    for (std::int64_t x = 0; x < 8; ++x) clip.at(0, y, x) = 1.0f;
  OcclusionConfig cfg;
  cfg.window = {1, 8, 8};
  cfg.stride = {1, 8, 8};
  const auto map = occlusion_saliency(box_sum_scorer(0, 0, 8, 8), clip, cfg);

  // baseline is the clip mean m = 64 / 256; occluding the region moves each of
  // its 64 pixels from 1 to m, out of a normaliser of 256
  const double m = 64.0 / 256.0;
  const double expected = 64.0 * (1.0 - m) / 256.0;
  for (std::int64_t y = 0; y < 16; ++y)
    for (std::int64_t x = 0; x < 16; ++x) {
      const float v = map.values[static_cast<std::size_t>(y * 16 + x)];
      if (y < 8 && x < 8) CHECK(v == doctest::Approx(expected));
      else CHECK(v == 0.0f);
    }
}

TEST_CASE("overlapping windows average their drops") {
  VideoClip clip(1, 8, 8, 0.0f);
  clip.at(0, 0, 0) = 1.0f;
  OcclusionConfig cfg;
  cfg.window = {1, 4, 4};
  cfg.stride = {1, 2, 2};
  const auto map = occlusion_saliency(box_sum_scorer(0, 0, 1, 1), clip, cfg);
  const double drop = (1.0 - 1.0 / 64.0) / 64.0;
  // (0,0) is covered by one window, which drops; (0,2) by two, one of which drops
  CHECK(map.values[0] == doctest::Approx(drop));
  CHECK(map.values[2] == doctest::Approx(drop / 2.0));
  CHECK(map.values[2 * 8 + 2] == doctest::Approx(drop / 4.0));
  CHECK(map.values[7 * 8 + 7] == 0.0f);
}

TEST_CASE("saliency is clamped below at zero") {
  // occluding with the mean raises a dark region, so drops are negative
  VideoClip clip(1, 8, 8, 1.0f);
  for (std::int64_t y = 0; y < 4; ++y)
    for (std::int64_t x = 0; x < 4; ++x) clip.at(0, y, x) = 0.0f;
  OcclusionConfig cfg;
  cfg.window = {1, 4, 4};
  cfg.stride = {1, 4, 4};
  const auto map = occlusion_saliency(box_sum_scorer(0, 0, 4, 4), clip, cfg);
  CHECK(std::all_of(map.values.begin(), map.values.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("occlusion config errors") {
  const auto clip = testutil::random_clip(2, 6, 6, 3);
  auto constant = [](const VideoClip&) { return 0.0; };
  OcclusionConfig big;
  CHECK_THROWS_AS(occlusion_saliency(constant, clip, big), ConfigError);
  OcclusionConfig zero;
  zero.window = {1, 2, 2};
  zero.stride = {1, 0, 2};
  CHECK_THROWS_AS(occlusion_saliency(constant, clip, zero), ConfigError);
}

TEST_CASE("planted signal concentrates saliency inside its box") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    auto clip = testutil::random_clip(2, 64, 64, 100 + static_cast<std::uint64_t>(trial), 0.0f, 0.3f);
    const auto x0 = rng.uniform_int(4, 40), y0 = rng.uniform_int(4, 40);
    const auto x1 = x0 + rng.uniform_int(10, 20), y1 = y0 + rng.uniform_int(10, 20);
    for (std::int64_t t = 0; t < 2; ++t)
      for (std::int64_t y = y0; y < y1; ++y)
        for (std::int64_t x = x0; x < x1; ++x) clip.at(t, y, x) = 0.9f;
    const auto map = occlusion_saliency(box_sum_scorer(x0, y0, x1, y1), clip, OcclusionConfig{});
    double inside = 0.0, total = 0.0;
    for (std::int64_t t = 0; t < 2; ++t)
      for (std::int64_t y = 0; y < 64; ++y)
        for (std::int64_t x = 0; x < 64; ++x) {
          const double v = map.values[static_cast<std::size_t>((t * 64 + y) * 64 + x)];
          total += v;
          if (y >= y0 && y < y1 && x >= x0 && x < x1) inside += v;
        }
    CHECK(total > 0.0);
    CHECK(inside / total >= 0.5);
  }
}

TEST_CASE("threshold top fraction") {
  std::vector<float> distinct(100);
  std::iota(distinct.begin(), distinct.end(), 0.0f);
  Rng rng(5);
  rng.shuffle(distinct);
  const auto m = threshold_top_fraction(map_of(1, 10, 10, distinct), 0.1);
  for (std::size_t i = 0; i < 100; ++i) CHECK(m[i] == (distinct[i] >= 90.0f ? 1 : 0));

  const auto all = threshold_top_fraction(map_of(1, 10, 10, distinct), 1.0);
  CHECK(count_marked(all, 0, 100) == 100);

  const auto ties = threshold_top_fraction(map_of(1, 10, 10, std::vector<float>(100, 0.3f)), 0.1);
  for (std::size_t i = 0; i < 100; ++i) CHECK(ties[i] == (i < 10 ? 1 : 0));

  CHECK_THROWS_AS(threshold_top_fraction(map_of(1, 2, 2, std::vector<float>(4)), 0.0), ConfigError);
  CHECK_THROWS_AS(threshold_top_fraction(map_of(1, 2, 2, std::vector<float>(4)), 1.5), ConfigError);
}

TEST_CASE("threshold marks ceil(fraction * plane) pixels in every frame") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = rng.uniform_int(1, 3), h = rng.uniform_int(1, 17), w = rng.uniform_int(1, 17);
    const double fraction = rng.uniform(0.01, 1.0);
    std::vector<float> v(static_cast<std::size_t>(t * h * w));
    for (auto& e : v) e = static_cast<float>(rng.uniform_int(0, 4));
    const auto mask = threshold_top_fraction(map_of(t, h, w, v), fraction);
    const auto expected = static_cast<std::int64_t>(std::ceil(fraction * static_cast<double>(h * w) - 1e-9));
    for (std::int64_t f = 0; f < t; ++f) CHECK(count_marked(mask, f * h * w, h * w) == expected);
  }
}

TEST_CASE("extract boxes") {
  const std::int64_t H = 12, W = 12;
  std::vector<float> sal(H * W, 1.0f);
  std::vector<std::uint8_t> mask(H * W, 0);
  CHECK(extract_boxes(mask, sal, H, W, 0).empty());

  for (std::int64_t y = 2; y < 9; ++y)
    for (std::int64_t x = 3; x < 8; ++x) mask[static_cast<std::size_t>(y * W + x)] = 1;
  auto boxes = extract_boxes(mask, sal, H, W, 4);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].frame_index == 4);
  CHECK(boxes[0].x0 == 3);
  CHECK(boxes[0].y0 == 2);
  CHECK(boxes[0].x1 == 8);
  CHECK(boxes[0].y1 == 9);
  CHECK(boxes[0].mass == doctest::Approx(35.0));

  std::fill(mask.begin(), mask.end(), 0);
  for (std::int64_t y = 0; y < 3; ++y)
    for (std::int64_t x = 0; x < 3; ++x) {
      mask[static_cast<std::size_t>(y * W + x)] = 1;
      mask[static_cast<std::size_t>((y + 3) * W + x + 3)] = 1;
    }
  boxes = extract_boxes(mask, sal, H, W, 0);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].x0 == 0);
  CHECK(boxes[0].y0 == 0);
  CHECK(boxes[0].x1 == 6);
  CHECK(boxes[0].y1 == 6);

  // components under four pixels are dropped
  std::fill(mask.begin(), mask.end(), 0);
  mask[0] = mask[1] = mask[W] = 1;
  CHECK(extract_boxes(mask, sal, H, W, 0).empty());
  mask[W + 1] = 1;
  CHECK(extract_boxes(mask, sal, H, W, 0).size() == 1);

  CHECK_THROWS_AS(extract_boxes(std::vector<std::uint8_t>(3), sal, H, W, 0), InputError);
}

TEST_CASE("box iou") {
  CHECK(box_iou(0, 0, 10, 10, 0, 0, 10, 10) == 1.0);
  CHECK(box_iou(0, 0, 10, 10, 10, 0, 20, 10) == 0.0);
  CHECK(box_iou(0, 0, 10, 10, 5, 0, 15, 10) == doctest::Approx(1.0 / 3.0));
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    std::array<std::int64_t, 8> b{};
    for (int k = 0; k < 2; ++k) {
      b[4 * k] = rng.uniform_int(0, 20);
      b[4 * k + 1] = rng.uniform_int(0, 20);
      b[4 * k + 2] = b[4 * k] + rng.uniform_int(1, 10);
      b[4 * k + 3] = b[4 * k + 1] + rng.uniform_int(1, 10);
    }
    const double ab = box_iou(b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]);
    CHECK(ab == box_iou(b[4], b[5], b[6], b[7], b[0], b[1], b[2], b[3]));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(box_iou(b[0], b[1], b[2], b[3], b[0], b[1], b[2], b[3]) == 1.0);
  }
}

TEST_CASE("weighted iou") {
  const GroundTruthBox gt{0, 0, 0, 10, 10};
  CHECK(weighted_iou({PredBox{0, 0, 0, 10, 10, 2.0}}, {gt}) == 1.0);
  CHECK(weighted_iou({PredBox{0, 20, 20, 30, 30, 2.0}}, {gt}) == 0.0);
  CHECK(weighted_iou({PredBox{0, 0, 0, 10, 10, 3.0}, PredBox{0, 20, 20, 30, 30, 1.0}}, {gt}) ==
        doctest::Approx(0.75));
  // frame 1 has ground truth but no prediction and scores zero
  CHECK(weighted_iou({PredBox{0, 0, 0, 10, 10, 1.0}}, {gt, GroundTruthBox{1, 0, 0, 10, 10}}) ==
        doctest::Approx(0.5));
  CHECK(weighted_iou({}, {gt}) == 0.0);
  CHECK(weighted_iou({}, {}) == 0.0);
}

TEST_CASE("weighted iou is bounded and invariant to mass scaling") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PredBox> pred;
    std::vector<GroundTruthBox> gt;
    for (int i = 0; i < 4; ++i) {
      const auto f = rng.uniform_int(0, 2), x = rng.uniform_int(0, 20), y = rng.uniform_int(0, 20);
      pred.push_back({f, x, y, x + rng.uniform_int(1, 10), y + rng.uniform_int(1, 10), rng.uniform(0.1, 5.0)});
    }
    for (int i = 0; i < 2; ++i) {
      const auto f = rng.uniform_int(0, 2), x = rng.uniform_int(0, 20), y = rng.uniform_int(0, 20);
      gt.push_back({f, x, y, x + rng.uniform_int(1, 10), y + rng.uniform_int(1, 10)});
    }
    const double w = weighted_iou(pred, gt);
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
    auto scaled = pred;
    for (auto& p : scaled) p.mass *= 7.5;
    CHECK(weighted_iou(scaled, gt) == doctest::Approx(w).epsilon(1e-12));
  }
}
