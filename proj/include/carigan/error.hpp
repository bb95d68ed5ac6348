// Copyright 2026 The carigan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace carigan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (wrong shape, wrong length, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Landmarks cannot define a similarity transform (e.g. coincident eyes).
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed manifest, config file or checkpoint metadata.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A training step produced a non-finite loss term.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace carigan
