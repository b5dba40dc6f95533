// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "stssl/errors.hpp"
#include "stssl/videodata.hpp"

namespace stssl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint32_t swap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
}

json box_to_json(const GroundTruthBox& b) {
  return {{"frame", b.frame_index}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}};
}

GroundTruthBox box_from_json(const json& j) {
  return {j.at("frame").get<std::int64_t>(), j.at("x0").get<std::int64_t>(), j.at("y0").get<std::int64_t>(),
          j.at("x1").get<std::int64_t>(), j.at("y1").get<std::int64_t>()};
}

json clip_header(const std::string& id, const std::string& source, const VideoClip& clip) {
  return {{"clip_id", id},
          {"source_id", source},
          {"frames", clip.frames},
          {"height", clip.height},
          {"width", clip.width},
          {"frame_rate", clip.frame_rate}};
}

VideoClip load_clip(const json& j, const fs::path& dir) {
  VideoClip clip(j.at("frames").get<std::int64_t>(), j.at("height").get<std::int64_t>(),
                 j.at("width").get<std::int64_t>());
  clip.frame_rate = j.value("frame_rate", 20.0);
  clip.pixels = read_f32(dir / (j.at("clip_id").get<std::string>() + ".f32"), static_cast<std::size_t>(clip.size()));
  clip.validate();
  return clip;
}

}  // namespace

void write_f32(const fs::path& path, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float v : values) {
      auto bits = swap32(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
  if (!out) throw InputError("write failed for " + path.string());
}

std::vector<float> read_f32(const fs::path& path, std::size_t expected_count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw InputError("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected_count * 4) {
    throw InputError(path.string() + ": expected " + std::to_string(expected_count * 4) + " bytes, found " +
                     std::to_string(bytes));
  }
  in.seekg(0);
  std::vector<float> values(expected_count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : values) v = std::bit_cast<float>(swap32(std::bit_cast<std::uint32_t>(v)));
  }
  return values;
}

void save_dataset(const DatasetManifest& manifest, const fs::path& dir) {
  fs::create_directories(dir);
  json clips = json::array();
  for (const auto& c : manifest.labeled) {
    json j = clip_header(c.clip_id, c.source_id, c.clip);
    j["split"] = split_name(c.split);
    j["label"] = c.label;
    j["boxes"] = json::array();
    for (const auto& b : c.boxes) j["boxes"].push_back(box_to_json(b));
    clips.push_back(std::move(j));
    write_f32(dir / (c.clip_id + ".f32"), c.clip.pixels);
  }
  for (const auto& u : manifest.unlabeled) {
    json j = clip_header(u.clip_id, u.source_id, u.clip);
    j["split"] = split_name(Split::kUnlabeled);
    j["label"] = nullptr;
    j["boxes"] = json::array();
    clips.push_back(std::move(j));
    write_f32(dir / (u.clip_id + ".f32"), u.clip.pixels);
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw InputError("cannot write manifest in " + dir.string());
  out << json{{"version", 1}, {"clips", clips}}.dump(1) << '\n';
}

DatasetManifest load_dataset(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw InputError("no manifest.json in " + dir.string());
  DatasetManifest manifest;
  try {
    const json doc = json::parse(in);
    for (const auto& j : doc.at("clips")) {
      const Split split = parse_split(j.at("split").get<std::string>());
      if (split == Split::kUnlabeled) {
        manifest.unlabeled.push_back(
            {j.at("clip_id").get<std::string>(), j.at("source_id").get<std::string>(), load_clip(j, dir)});
        continue;
      }
      LabeledClip c;
      c.clip_id = j.at("clip_id").get<std::string>();
      c.source_id = j.at("source_id").get<std::string>();
      c.split = split;
      c.label = j.at("label").get<int>();
      if (c.label != 0 && c.label != 1) throw InputError(c.clip_id + ": label must be 0 or 1");
      c.clip = load_clip(j, dir);
      for (const auto& b : j.at("boxes")) {
        auto box = box_from_json(b);
        if (box.frame_index < 0 || box.frame_index >= c.clip.frames || box.x0 < 0 || box.y0 < 0 ||
            box.x1 > c.clip.width || box.y1 > c.clip.height || box.x0 >= box.x1 || box.y0 >= box.y1) {
          throw InputError(c.clip_id + ": ground-truth box out of bounds");
        }
        c.boxes.push_back(box);
      }
      manifest.labeled.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed manifest.json: ") + e.what());
  }
  return manifest;
}

}  // namespace stssl
