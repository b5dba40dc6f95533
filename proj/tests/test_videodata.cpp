// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <filesystem>
#include <fstream>
#include <set>

#include "stssl/errors.hpp"
#include "stssl/videodata.hpp"
#include "test_util.hpp"

using namespace stssl;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.n_unlabeled = 6;
  c.n_labeled = 10;
  c.sources = 5;
  c.frames = 4;
  c.height = 16;
  c.width = 16;
  return c;
}

}  // namespace

TEST_CASE("synthetic dataset: exact label split, shapes and value range") {
  const auto data = generate_synthetic_dataset(small_config(), 1);
  REQUIRE(data.labeled.size() == 10);
  CHECK(data.unlabeled.size() == 6);
  int positives = 0;
  for (const auto& c : data.labeled) {
    positives += c.label;
    CHECK(c.clip.frames == 4);
    CHECK(c.clip.height == 16);
    CHECK(c.clip.width == 16);
    CHECK_NOTHROW(c.clip.validate());
    if (c.label == 0) {
      CHECK(c.boxes.empty());
    } else {
      REQUIRE(c.boxes.size() == 4);
      for (const auto& b : c.boxes) {
        CHECK(b.x0 >= 0);
        CHECK(b.y0 >= 0);
        CHECK(b.x1 <= 16);
        CHECK(b.y1 <= 16);
        CHECK(b.x0 < b.x1);
        CHECK(b.y0 < b.y1);
      }
    }
  }
  CHECK(positives == 5);
}

TEST_CASE("synthetic dataset: default dimensions give 16x64x64 clips in range") {
  SynthConfig c;
  c.n_unlabeled = 2;
  c.n_labeled = 4;
  c.sources = 2;
  const auto data = generate_synthetic_dataset(c, 9);
  for (const auto& l : data.labeled) {
    CHECK(l.clip.frames == 16);
    CHECK(l.clip.height == 64);
    CHECK(l.clip.width == 64);
    CHECK(std::all_of(l.clip.pixels.begin(), l.clip.pixels.end(), [](float v) { return v >= 0.0f && v <= 1.0f; }));
  }
}

TEST_CASE("synthetic dataset is a pure function of config and seed") {
  const auto a = generate_synthetic_dataset(small_config(), 3);
  const auto b = generate_synthetic_dataset(small_config(), 3);
  const auto c = generate_synthetic_dataset(small_config(), 4);
  REQUIRE(a.labeled.size() == b.labeled.size());
  for (std::size_t i = 0; i < a.labeled.size(); ++i) {
    CHECK(a.labeled[i].clip == b.labeled[i].clip);
    CHECK(a.labeled[i].boxes == b.labeled[i].boxes);
  }
  CHECK_FALSE(a.labeled[0].clip == c.labeled[0].clip);
}

TEST_CASE("positive blobs move at most 2 px per frame") {
  SynthConfig c = small_config();
  c.frames = 16;
  c.height = c.width = 64;
  const auto data = generate_synthetic_dataset(c, 5);
  for (const auto& l : data.labeled) {
    for (std::size_t t = 1; t < l.boxes.size(); ++t) {
      const double cx0 = 0.5 * (l.boxes[t - 1].x0 + l.boxes[t - 1].x1), cx1 = 0.5 * (l.boxes[t].x0 + l.boxes[t].x1);
      const double cy0 = 0.5 * (l.boxes[t - 1].y0 + l.boxes[t - 1].y1), cy1 = 0.5 * (l.boxes[t].y0 + l.boxes[t].y1);
      CHECK(std::abs(cx1 - cx0) <= 2.0);
      CHECK(std::abs(cy1 - cy0) <= 2.0);
    }
  }
}

TEST_CASE("synthetic config validation") {
  SynthConfig c = small_config();
  c.height = 8;
  CHECK_THROWS_AS(generate_synthetic_dataset(c, 1), ConfigError);
  c = small_config();
  c.frames = 0;
  CHECK_THROWS_AS(generate_synthetic_dataset(c, 1), ConfigError);
}

TEST_CASE("sample_window") {
  Rng rng(1);
  const auto clip16 = testutil::numbered_clip(16, 4, 4);
  CHECK(sample_window(clip16, 16, rng) == clip16);

  const auto clip60 = testutil::numbered_clip(60, 2, 2);
  for (int i = 0; i < 200; ++i) {
    const auto w = sample_window(clip60, 16, rng);
    REQUIRE(w.frames == 16);
    // frame values encode their source index
    const auto first = static_cast<std::int64_t>(std::lround(w.at(0, 0, 0) * 61.0f)) - 1;
    CHECK(first >= 0);
    CHECK(first <= 44);
    for (std::int64_t t = 0; t < 16; ++t) CHECK(w.at(t, 1, 1) == clip60.at(first + t, 1, 1));
  }
  CHECK_THROWS_AS(sample_window(testutil::numbered_clip(10, 2, 2), 16, rng), InputError);
}

TEST_CASE("crop_boxes keeps only frames inside the window, reindexed") {
  std::vector<GroundTruthBox> boxes{{0, 1, 1, 3, 3}, {1, 2, 2, 4, 4}, {2, 3, 3, 5, 5}};
  const auto cropped = crop_boxes(boxes, 1, 2);
  REQUIRE(cropped.size() == 2);
  CHECK(cropped[0] == GroundTruthBox{0, 2, 2, 4, 4});
  CHECK(cropped[1] == GroundTruthBox{1, 3, 3, 5, 5});
  CHECK(center_offset(16, 8) == 4);
  CHECK(center_offset(8, 8) == 0);
}

TEST_CASE("split_by_source: 10 sources at 0.8/0.1/0.1 give 8/1/1") {
  DatasetManifest m;
  for (int s = 0; s < 10; ++s)
    for (int k = 0; k < 3; ++k)
      m.labeled.push_back(testutil::labeled("c" + std::to_string(s * 3 + k), "s" + std::to_string(s), k % 2));
  const auto out = split_by_source(m, {0.8, 0.1, 0.1}, 42);
  std::map<Split, std::set<std::string>> sources;
  for (const auto& c : out.labeled) sources[c.split].insert(c.source_id);
  CHECK(sources[Split::kTrain].size() == 8);
  CHECK(sources[Split::kVal].size() == 1);
  CHECK(sources[Split::kTest].size() == 1);
  for (auto a : {Split::kTrain, Split::kVal, Split::kTest})
    for (auto b : {Split::kTrain, Split::kVal, Split::kTest})
      if (a != b)
        for (const auto& s : sources[a]) CHECK(sources[b].count(s) == 0);

  const auto again = split_by_source(m, {0.8, 0.1, 0.1}, 42);
  for (std::size_t i = 0; i < out.labeled.size(); ++i) CHECK(out.labeled[i].split == again.labeled[i].split);
}

TEST_CASE("split_by_source: random manifests never share a source across splits") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig c = small_config();
    c.n_labeled = 40;
    c.sources = 3 + static_cast<std::int64_t>(seed % 7);
    c.frames = 1;
    const auto out = split_by_source(generate_synthetic_dataset(c, seed), {0.6, 0.2, 0.2}, seed);
    std::map<std::string, Split> owner;
    for (const auto& l : out.labeled) {
      auto [it, inserted] = owner.emplace(l.source_id, l.split);
      if (!inserted) CHECK(it->second == l.split);
    }
  }
}

TEST_CASE("split_by_source errors") {
  DatasetManifest m;
  m.labeled.push_back(testutil::labeled("a", "s0", 0));
  m.labeled.push_back(testutil::labeled("b", "s1", 1));
  CHECK_THROWS_AS(split_by_source(m, {0.8, 0.1, 0.1}, 1), ConfigError);
  m.labeled.push_back(testutil::labeled("c", "s2", 1));
  CHECK_THROWS_AS(split_by_source(m, {0.8, 0.1, 0.2}, 1), ConfigError);
  CHECK_THROWS_AS(split_by_source(m, {1.0, 0.0, 0.0}, 1), ConfigError);
}

TEST_CASE("subsample_fraction sizes") {
  CHECK(subsample_count(1296, 0.05) == 65);
  CHECK(subsample_count(200, 0.3) == 60);
  CHECK(subsample_count(100, 1.0) == 100);

  std::vector<LabeledClip> train;
  for (int i = 0; i < 200; ++i) train.push_back(testutil::labeled("c" + std::to_string(i), "s", i % 2));
  const auto sub = subsample_fraction(train, 0.3, 5);
  CHECK(sub.size() == 60);
  std::set<std::string> all;
  for (const auto& c : train) all.insert(c.clip_id);
  std::set<std::string> picked;
  for (const auto& c : sub) {
    CHECK(all.count(c.clip_id) == 1);
    picked.insert(c.clip_id);
  }
  CHECK(picked.size() == 60);

  std::vector<LabeledClip> hundred(train.begin(), train.begin() + 100);
  const auto same = subsample_fraction(hundred, 1.0, 5);
  REQUIRE(same.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(same[i].clip_id == hundred[i].clip_id);

  CHECK_THROWS_AS(subsample_fraction(std::vector<LabeledClip>(train.begin(), train.begin() + 5), 0.05, 1),
                  ConfigError);
}

TEST_CASE("subsample_fraction is nested across fractions for a fixed seed") {
  std::vector<LabeledClip> train;
  for (int i = 0; i < 137; ++i) train.push_back(testutil::labeled("c" + std::to_string(i), "s", i % 2));
  std::set<std::string> previous;
  for (double f : {1.0, 0.5, 0.3, 0.2, 0.1, 0.05}) {
    std::set<std::string> ids;
    for (const auto& c : subsample_fraction(train, f, 77)) ids.insert(c.clip_id);
    if (!previous.empty())
      for (const auto& id : ids) CHECK(previous.count(id) == 1);
    previous = ids;
  }
}

TEST_CASE("dataset directory round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "stssl_test_dataset";
  std::filesystem::remove_all(dir);
  auto data = split_by_source(generate_synthetic_dataset(small_config(), 11), {0.6, 0.2, 0.2}, 2);
  save_dataset(data, dir);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::file_size(dir / (data.labeled[0].clip_id + ".f32")) == 4 * 16 * 16 * 4);
  const auto back = load_dataset(dir);
  REQUIRE(back.labeled.size() == data.labeled.size());
  REQUIRE(back.unlabeled.size() == data.unlabeled.size());
  for (std::size_t i = 0; i < data.labeled.size(); ++i) {
    CHECK(back.labeled[i].clip == data.labeled[i].clip);
    CHECK(back.labeled[i].boxes == data.labeled[i].boxes);
    CHECK(back.labeled[i].split == data.labeled[i].split);
    CHECK(back.labeled[i].source_id == data.labeled[i].source_id);
    CHECK(back.labeled[i].label == data.labeled[i].label);
  }
  for (std::size_t i = 0; i < data.unlabeled.size(); ++i) CHECK(back.unlabeled[i].clip == data.unlabeled[i].clip);

  // a short clip file is a data error
  std::filesystem::resize_file(dir / (data.labeled[0].clip_id + ".f32"), 100);
  CHECK_THROWS_AS(load_dataset(dir), InputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("f32 files are little-endian frame-major") {
  const auto path = std::filesystem::temp_directory_path() / "stssl_test.f32";
  const std::vector<float> values{1.0f, -2.5f, 0.25f};
  write_f32(path, values);
  std::ifstream in(path, std::ios::binary);
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  // 1.0f = 0x3F800000
  CHECK(bytes[0] == 0x00);
  CHECK(bytes[1] == 0x00);
  CHECK(bytes[2] == 0x80);
  CHECK(bytes[3] == 0x3F);
  CHECK(read_f32(path, 3) == values);
  CHECK_THROWS_AS(read_f32(path, 4), InputError);
  std::filesystem::remove(path);
}

TEST_CASE("clip validation") {
  VideoClip c(2, 3, 3, 0.5f);
  CHECK_NOTHROW(c.validate());
  c.pixels[4] = 1.5f;
  CHECK_THROWS_AS(c.validate(), InputError);
  VideoClip empty(0, 3, 3);
  CHECK_THROWS_AS(empty.validate(), InputError);
}
