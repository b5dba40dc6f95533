// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "stssl/model.hpp"

namespace stssl {

inline constexpr char kCheckpointMagic[9] = "STSSLCK1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// How the stored parameters were produced.
struct Provenance {
  std::string stage;    // "pretrain" or "classifier"
  std::string variant;  // SSL variant, empty when not pretrained
  std::string mode;     // training regime, empty for pretraining
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  bool operator==(const Provenance&) const = default;
};

struct Checkpoint {
  EncoderConfig encoder;
  HeadConfig heads;
  ModelParams params;
  Provenance provenance;
  /// Tensor-name prefix that downstream training reads from this file.
  std::string downstream_prefix = "encoder.";
  bool operator==(const Checkpoint&) const = default;
};

/// Layout: 8-byte magic, u32 LE header length, JSON header, then the raw
/// little-endian float32 blobs in header order.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws CheckpointError with kBadMagic, kTruncated, kVersionMismatch,
/// kMalformed or kIo.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over names, shapes, flags and float bytes.
std::uint64_t params_digest(const ModelParams& params);

}  // namespace stssl
