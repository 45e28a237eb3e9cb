// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sigan/tensor.hpp"

namespace sigan::data {

enum class DefectClass { kDefectFree, kCrack, kFingerInterruption };
enum class Provenance { kReal, kGenerated, kOfflineAugmented };
enum class Split { kTrain, kTest };

inline constexpr int kDefaultImageSize = 256;
inline constexpr std::array<DefectClass, 3> kAllClasses{
    DefectClass::kDefectFree, DefectClass::kCrack, DefectClass::kFingerInterruption};

std::string_view class_name(DefectClass c);
DefectClass parse_class(std::string_view name);
std::string_view provenance_name(Provenance p);
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

/// 8-bit single-channel raster as decoded from disk.
struct GrayImage8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Real-valued single-channel grid, row-major.
struct PixelGrid {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  PixelGrid() = default;
  PixelGrid(int h, int w, float fill = 0.0f)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return values.size(); }
  bool operator==(const PixelGrid&) const = default;
};

struct ImageSample {
  /// "<class>/<file stem>", unique within a split.
  std::string id;
  DefectClass domain = DefectClass::kDefectFree;
  PixelGrid pixels;
  int original_height = 0;
  int original_width = 0;
  Provenance provenance = Provenance::kReal;
  std::string source_path;
};

struct DomainCollection {
  Split split = Split::kTrain;
  std::vector<ImageSample> defect_free;
  /// Crack and finger-interruption samples, each carrying its own class label.
  std::vector<ImageSample> defective;

  std::map<DefectClass, std::size_t> counts() const;
  /// Defective samples of one class (or both when `cls` is kDefectFree).
  std::vector<const ImageSample*> defective_of(DefectClass cls) const;
  std::vector<const ImageSample*> defect_free_view() const;
};

// ---------------------------------------------------------------------------
// Pixel mapping

/// v -> 2 * (v / 255) - 1
inline float normalize_value(float v) { return 2.0f * (v / 255.0f) - 1.0f; }
/// Inverse mapping with rounding to the 8-bit grid, clamped to [0, 255].
std::uint8_t denormalize_value(float p);

/// Bilinear resize with half-pixel centers (edge-clamped).
std::vector<float> resize_bilinear(const std::vector<float>& src, int src_h, int src_w, int dst_h,
                                   int dst_w);

/// Bilinear resize to size x size followed by the [-1, 1] mapping.
PixelGrid preprocess(const GrayImage8& raw, int size = kDefaultImageSize);
GrayImage8 to_gray8(const PixelGrid& grid);

// ---------------------------------------------------------------------------
// Image files

/// Decodes PNG/JPEG. Multi-channel files are averaged to one channel with a warning.
GrayImage8 read_gray_image(const std::filesystem::path& file);
/// Writes an 8-bit single-channel lossless PNG.
void write_gray_png(const std::filesystem::path& file, const GrayImage8& image);

// ---------------------------------------------------------------------------
// Dataset

struct LoadOptions {
  int image_size = kDefaultImageSize;
};

/// Reads `<root>/<split>/<class>/*.png|*.jpg` for every class, sorted by file
/// name. Files listed in `<root>/<split>/manifest.json` load as generated;
/// a test split with such a manifest is rejected.
DomainCollection load_dataset(const std::filesystem::path& root, Split split,
                              const LoadOptions& opts = {});

/// Loads every image under `dir` (recursively, sorted) as samples of `domain`.
std::vector<ImageSample> load_image_dir(const std::filesystem::path& dir, DefectClass domain,
                                        const LoadOptions& opts = {});

struct OfflineAugmentOptions {
  bool mirror = true;
  bool flip = true;
  bool contrast = true;
};

/// Originals followed, per original, by its mirror, vertical flip, and
/// contrast-stretched copies.
std::vector<ImageSample> augment_offline(const std::vector<ImageSample>& defective,
                                         const OfflineAugmentOptions& opts = {});

PixelGrid mirror_horizontal(const PixelGrid& g);
PixelGrid flip_vertical(const PixelGrid& g);
/// Linear stretch of [min, max] to [-1, 1]; constant grids come back unchanged.
PixelGrid contrast_stretch(const PixelGrid& g);

/// Throws DatasetLayoutError when a sample id appears in both collections.
void check_disjoint(const DomainCollection& train, const DomainCollection& test);

// ---------------------------------------------------------------------------
// Sampling

struct BatchPair {
  Tensor<float> batch_a;  ///< defect-free, B x 1 x H x W
  Tensor<float> batch_b;  ///< defective, B x 1 x H x W
  std::vector<std::string> ids_a;
  std::vector<std::string> ids_b;
  std::string rng_state_tag;
};

Tensor<float> stack(const std::vector<const ImageSample*>& samples);
Tensor<float> stack(const std::vector<ImageSample>& samples);

/// Unpaired batches from two domains. Each domain is walked through seeded
/// permutations, one per pass; a pass yields floor(size / batch) batches and
/// drops the remainder. One epoch is one pass over the larger domain, the
/// smaller one is reshuffled and recycled. Batch k is a pure function of
/// (seed, k), so any position can be replayed.
class UnpairedSampler {
 public:
  UnpairedSampler(std::vector<const ImageSample*> domain_a,
                  std::vector<const ImageSample*> domain_b, int batch_size, std::uint64_t seed);

  int batch_size() const { return batch_size_; }
  std::int64_t steps_per_epoch() const;
  BatchPair batch(std::int64_t index) const;
  /// Only ids, for determinism checks and diagnostics.
  std::pair<std::vector<std::string>, std::vector<std::string>> batch_ids(std::int64_t index) const;

 private:
  std::vector<std::size_t> pick(int domain, std::int64_t index) const;
  std::vector<std::size_t> permutation(int domain, std::int64_t pass) const;

  std::array<std::vector<const ImageSample*>, 2> domains_;
  int batch_size_;
  std::uint64_t seed_;
};

}  // namespace sigan::data
