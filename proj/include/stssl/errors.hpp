// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace stssl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or combinations (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-contract input data (CLI exit code 3).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Metric undefined for the given scores, e.g. a single-class set.
class MetricError : public InputError {
 public:
  using InputError::InputError;
};

/// Degenerate numerics such as a zero-norm embedding row.
class ComputationError : public Error {
 public:
  using Error::Error;
};

/// API misuse: backward without a recorded forward, mismatched schemas.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Optimization failure (CLI exit code 4).
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, long step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class CheckpointError : public InputError {
 public:
  enum class Kind { kIo, kBadMagic, kTruncated, kVersionMismatch, kMalformed };

  CheckpointError(Kind kind, const std::string& what) : InputError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace stssl
