// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// Subcommand implementations shared by the C API and the command-line tool.
// Each takes a JSON request (field names mirror the command-line flags) and
// returns a JSON result; every run leaves a run_manifest.json in its output
// directory.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sigan::app {

using Json = nlohmann::ordered_json;

inline constexpr const char* kRunManifestFile = "run_manifest.json";
inline constexpr int kPrintDecimals = 4;

struct RunManifest {
  std::string command;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  /// Paths relative to the run directory, sorted.
  std::vector<std::string> artifacts;
  std::string tool_version;

  Json to_json() const;
  /// Writes through a temporary file and a rename.
  void write(const std::filesystem::path& run_dir) const;
};

/// "train", "segment", "augment", "evaluate-fid", "evaluate-seg".
const std::vector<std::string>& command_names();

/// Dispatches to the named command. Errors surface as sigan::Error.
Json run_command(const std::string& command, const Json& request);

/// Rounds every floating-point number in `j` to `decimals` places.
Json round_numbers(const Json& j, int decimals = kPrintDecimals);

/// UTC, ISO 8601 with seconds.
std::string utc_timestamp();

}  // namespace sigan::app
