// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sigan {

/// Error categories surfaced through the C API as status codes.
enum class ErrorCode {
  kInvalidArgument = 1,
  kConfig,
  kDatasetLayout,
  kIo,
  kShape,
  kRole,
  kNumeric,
  kInternal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorCode::kConfig, m) {}
};

class DatasetLayoutError : public Error {
 public:
  explicit DatasetLayoutError(const std::string& m)
      : Error(ErrorCode::kDatasetLayout, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorCode::kIo, m) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error(ErrorCode::kShape, m) {}
};

class RoleError : public Error {
 public:
  explicit RoleError(const std::string& m) : Error(ErrorCode::kRole, m) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error(ErrorCode::kNumeric, m) {}
};

}  // namespace sigan
