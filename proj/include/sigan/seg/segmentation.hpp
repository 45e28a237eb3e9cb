// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// Defect segmentation by translating a defective image to its defect-free
// counterpart, subtracting, and thresholding; plus pixel-level mask metrics.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigan/data/dataset.hpp"
#include "sigan/models/networks.hpp"

namespace sigan::seg {

enum class ThresholdMode { kFixed, kOtsu };
/// kAbsolute: |input - generated|. kSigned: max(input - generated, 0).
enum class Polarity { kAbsolute, kSigned };

std::string_view threshold_mode_name(ThresholdMode m);
std::string_view polarity_name(Polarity p);
Polarity parse_polarity(std::string_view name);

inline constexpr int kOtsuBins = 256;
inline constexpr double kMaxDifference = 2.0;

struct ThresholdConfig {
  ThresholdMode mode = ThresholdMode::kOtsu;
  /// Used in fixed mode.
  double value = 0.5;
  Polarity polarity = Polarity::kAbsolute;
  /// Connected components (8-neighbour) smaller than this are removed; 0 keeps all.
  int min_component_area = 0;
};

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;  ///< 0 or 1

  BinaryMask() = default;
  BinaryMask(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w, 0) {}
  std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;
};

struct SegmentationResult {
  std::string input_id;
  /// F's defect-free reconstruction of the input.
  data::PixelGrid generated;
  data::PixelGrid diff_map;
  BinaryMask mask;
  double threshold_used = 0;
  ThresholdMode threshold_mode = ThresholdMode::kOtsu;
};

/// Anything that maps a 1 x 1 x H x W image batch to a same-shaped output.
class ImageTranslator {
 public:
  virtual ~ImageTranslator() = default;
  virtual models::GeneratorRole role() const = 0;
  virtual Tensor<float> translate(const Tensor<float>& image) const = 0;
};

/// Evaluation-mode generator. Gray input is replicated to the generator's
/// channel count and its output is averaged back to one channel.
class GeneratorTranslator : public ImageTranslator {
 public:
  explicit GeneratorTranslator(const models::Generator<float>& g) : g_(g) {}
  models::GeneratorRole role() const override { return g_.role(); }
  Tensor<float> translate(const Tensor<float>& image) const override;

 private:
  const models::Generator<float>& g_;
};

class FunctionTranslator : public ImageTranslator {
 public:
  using Fn = std::function<Tensor<float>(const Tensor<float>&)>;
  FunctionTranslator(models::GeneratorRole role, Fn fn) : role_(role), fn_(std::move(fn)) {}
  models::GeneratorRole role() const override { return role_; }
  Tensor<float> translate(const Tensor<float>& image) const override { return fn_(image); }

 private:
  models::GeneratorRole role_;
  Fn fn_;
};

data::PixelGrid difference_map(const data::PixelGrid& input, const data::PixelGrid& generated,
                               Polarity polarity);

/// Threshold maximizing between-class variance of a 256-bin histogram over
/// [0, 2]. Candidates are the upper bin edges (k + 1) * 2 / 256, k = 0..254;
/// ties go to the smallest. A map without a usable split returns its maximum
/// (empty mask) and logs a warning.
double otsu_threshold(const data::PixelGrid& diff);
double threshold_select(const data::PixelGrid& diff, const ThresholdConfig& cfg);

/// mask = diff > threshold
BinaryMask apply_threshold(const data::PixelGrid& diff, double threshold);
void remove_small_components(BinaryMask& mask, int min_area);

/// Role F is required; anything else raises RoleError.
SegmentationResult segment(const data::ImageSample& defective, const ImageTranslator& f,
                           const ThresholdConfig& cfg);

struct SegMetrics {
  std::int64_t m_g = 0;  ///< ground-truth defect pixels
  std::int64_t m_d = 0;  ///< detected pixels
  std::int64_t m = 0;    ///< correctly detected pixels
  double cpt = 0;
  double crt = 0;
  double fscore = 0;

  /// cpt = m / m_g, crt = m / m_d, F = 2 cpt crt / (cpt + crt). Both masks
  /// empty gives 1, 1, 1; any other zero denominator gives 0.
  static SegMetrics from_counts(std::int64_t m_g, std::int64_t m_d, std::int64_t m);
  nlohmann::ordered_json to_json() const;
};

SegMetrics evaluate_masks(const BinaryMask& predicted, const BinaryMask& ground_truth);

struct SegReport {
  std::vector<std::pair<std::string, SegMetrics>> per_image;
  /// From summed pixel counts.
  SegMetrics micro;
  /// Means of the per-image ratios.
  double macro_cpt = 0;
  double macro_crt = 0;
  double macro_fscore = 0;

  nlohmann::ordered_json to_json() const;
};

/// Entries are sorted by id before aggregation.
SegReport aggregate(std::vector<std::pair<std::string, SegMetrics>> per_image);

/// Nonzero pixels are defects. Resized with nearest neighbour when a size is given.
BinaryMask read_mask(const std::filesystem::path& file, int height = 0, int width = 0);
/// 0 background, 255 defect.
void write_mask(const std::filesystem::path& file, const BinaryMask& mask);
BinaryMask resize_nearest(const BinaryMask& mask, int height, int width);

}  // namespace sigan::seg
