// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// Defective-image synthesis from defect-free inputs and the manifest that
// records where every generated file came from.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigan/data/dataset.hpp"
#include "sigan/seg/segmentation.hpp"

namespace sigan::aug {

inline constexpr const char* kManifestFile = "manifest.json";

struct ManifestEntry {
  /// Relative to the manifest's directory.
  std::string output_path;
  std::string source_id;
  std::string generator_checkpoint;
  data::DefectClass target_class = data::DefectClass::kCrack;
  data::Provenance provenance = data::Provenance::kGenerated;
};

struct ClassCounts {
  std::size_t real = 0;
  std::size_t fake = 0;
  bool operator==(const ClassCounts&) const = default;
};

struct AugmentationManifest {
  std::vector<ManifestEntry> entries;
  /// Fake tallies from generation; real tallies are filled in by merging.
  std::map<data::DefectClass, ClassCounts> counts;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  static AugmentationManifest from_json(const nlohmann::ordered_json& j);
  void write(const std::filesystem::path& dir) const;
  static AugmentationManifest read(const std::filesystem::path& file);
};

struct GenerateOptions {
  data::DefectClass target_class = data::DefectClass::kCrack;
  std::int64_t count = 0;
  /// Needed when count exceeds the number of defect-free inputs.
  bool with_replacement = false;
  std::uint64_t seed = 0;
  /// Recorded in every entry.
  std::string checkpoint_label;
  /// Allows writing into a directory that already holds a manifest.
  bool overwrite = false;
};

/// Translates `count` defect-free images with G and writes them as 8-bit
/// PNGs under `<out_dir>/<class>/`, plus `<out_dir>/manifest.json`. Inputs
/// are drawn without replacement up to the pool size, then with replacement.
/// Entries are ordered by source id.
AugmentationManifest generate_defective(const std::vector<data::ImageSample>& defect_free,
                                        const seg::ImageTranslator& g, const GenerateOptions& opts,
                                        const std::filesystem::path& out_dir);

/// Adds the manifest's generated images (resolved against `manifest_dir`) to
/// the defective list of a training collection. Test collections are rejected.
data::DomainCollection merge_dataset(const data::DomainCollection& base,
                                     const AugmentationManifest& manifest,
                                     const std::filesystem::path& manifest_dir,
                                     int image_size = data::kDefaultImageSize);

/// Real and generated tallies per defective class.
std::map<data::DefectClass, ClassCounts> provenance_counts(const data::DomainCollection& c);

}  // namespace sigan::aug
