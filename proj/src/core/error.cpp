// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/error.hpp"

namespace sigan {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kDatasetLayout: return "dataset_layout";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kRole: return "role";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kInternal: return "internal";
  }
  return "internal";
}

}  // namespace sigan
