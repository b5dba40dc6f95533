// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include <nlohmann/json.hpp>

#include "stssl/config.hpp"
#include "stssl/errors.hpp"

namespace stssl {

using nlohmann::json;
using Kind = CheckpointError::Kind;

namespace {

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_floats_le(std::string& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 4);
  char* dst = out.data() + start;
  for (float f : values) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) *dst++ = static_cast<char>((u >> (8 * i)) & 0xFFu);
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  json tensors = json::array();
  std::string blob;
  for (const auto& [name, param] : ck.params.entries()) {
    const std::uint64_t offset = blob.size();
    append_floats_le(blob, param.value.data());
    tensors.push_back({{"name", name},
                       {"shape", param.value.shape()},
                       {"trainable", param.trainable},
                       {"offset", offset},
                       {"length", blob.size() - offset}});
  }
  json header = {{"version", kCheckpointVersion},
                 {"encoder", ck.encoder},
                 {"heads", ck.heads},
                 {"provenance",
                  {{"stage", ck.provenance.stage},
                   {"variant", ck.provenance.variant},
                   {"mode", ck.provenance.mode},
                   {"steps", ck.provenance.steps},
                   {"seed", ck.provenance.seed}}},
                 {"downstream_prefix", ck.downstream_prefix},
                 {"tensors", tensors}};
  const std::string text = header.dump();

  std::string bytes(kCheckpointMagic, 8);
  append_u32_le(bytes, static_cast<std::uint32_t>(text.size()));
  bytes += text;
  bytes += blob;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(Kind::kIo, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(Kind::kIo, "short write to checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::kIo, "cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();

  if (bytes.size() < 8) throw CheckpointError(Kind::kTruncated, "file shorter than the magic" + where);
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw CheckpointError(Kind::kBadMagic, "bad checkpoint magic" + where);
  }
  if (bytes.size() < 12) throw CheckpointError(Kind::kTruncated, "missing header length" + where);
  const std::uint64_t header_len = read_u32_le(bytes.data() + 8);
  if (bytes.size() < 12 + header_len) throw CheckpointError(Kind::kTruncated, "truncated header" + where);

  json header;
  try {
    header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw CheckpointError(Kind::kMalformed, std::string("unparsable header: ") + e.what() + where);
  }

  Checkpoint ck;
  const unsigned char* blob = bytes.data() + 12 + header_len;
  const std::uint64_t blob_size = bytes.size() - 12 - header_len;
  try {
    const auto version = header.at("version").get<std::uint32_t>();
    if (version != kCheckpointVersion) {
      throw CheckpointError(Kind::kVersionMismatch, "checkpoint version " + std::to_string(version) +
                                                        ", expected " + std::to_string(kCheckpointVersion) + where);
    }
    ck.encoder = header.at("encoder").get<EncoderConfig>();
    ck.heads = header.at("heads").get<HeadConfig>();
    const auto& prov = header.at("provenance");
    ck.provenance.stage = prov.at("stage").get<std::string>();
    ck.provenance.variant = prov.at("variant").get<std::string>();
    ck.provenance.mode = prov.at("mode").get<std::string>();
    ck.provenance.steps = prov.at("steps").get<std::int64_t>();
    ck.provenance.seed = prov.at("seed").get<std::uint64_t>();
    ck.downstream_prefix = header.at("downstream_prefix").get<std::string>();
    for (const auto& t : header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<Shape>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto length = t.at("length").get<std::uint64_t>();
      const auto n = shape_numel(shape);
      if (length != static_cast<std::uint64_t>(n) * 4) {
        throw CheckpointError(Kind::kMalformed, "tensor " + name + " length does not match its shape" + where);
      }
      if (offset > blob_size || length > blob_size - offset) {
        throw CheckpointError(Kind::kTruncated, "blob of tensor " + name + " is truncated" + where);
      }
      std::vector<float> values(static_cast<std::size_t>(n));
      const unsigned char* p = blob + offset;
      for (auto& v : values) {
        v = std::bit_cast<float>(read_u32_le(p));
        p += 4;
      }
      if (ck.params.contains(name)) throw CheckpointError(Kind::kMalformed, "duplicate tensor " + name + where);
      ck.params.add(name, Tensor(shape, std::move(values)), t.at("trainable").get<bool>());
    }
  } catch (const json::exception& e) {
    throw CheckpointError(Kind::kMalformed, std::string("invalid header: ") + e.what() + where);
  } catch (const ConfigError& e) {
    throw CheckpointError(Kind::kMalformed, std::string("invalid header: ") + e.what() + where);
  }
  return ck;
}

std::uint64_t params_digest(const ModelParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, param] : params.entries()) {
    mix(name.data(), name.size());
    for (auto d : param.value.shape()) mix(&d, sizeof d);
    const unsigned char flag = param.trainable ? 1 : 0;
    mix(&flag, 1);
    const auto data = param.value.data();
    mix(data.data(), data.size_bytes());
  }
  return h;
}

}  // namespace stssl
