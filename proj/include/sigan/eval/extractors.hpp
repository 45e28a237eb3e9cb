// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sigan/data/dataset.hpp"
#include "sigan/eval/fid.hpp"

namespace sigan::eval {

/// Maps one preprocessed image to a fixed-length feature vector.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<double> extract(const data::PixelGrid& image) const = 0;
};

/// D = 1: the mean pixel value.
class MeanPixelExtractor : public FeatureExtractor {
 public:
  std::string id() const override { return "mean_pixel"; }
  int dim() const override { return 1; }
  std::vector<double> extract(const data::PixelGrid& image) const override;
};

/// Normalized intensity histogram over [-1, 1].
class HistogramExtractor : public FeatureExtractor {
 public:
  explicit HistogramExtractor(int bins = 16);
  std::string id() const override { return "histogram" + std::to_string(bins_); }
  int dim() const override { return bins_; }
  std::vector<double> extract(const data::PixelGrid& image) const override;

 private:
  int bins_;
};

/// Rows are images in input order. Throws on an empty list or when the
/// extractor returns a vector of the wrong length.
FeatureMatrix extract_features(const std::vector<data::ImageSample>& images,
                               const FeatureExtractor& extractor);

/// `$SIGAN_CACHE`, falling back to `$HOME/.cache/sigan`.
std::filesystem::path cache_dir();

/// "inception_v3" (weights under `<cache>/inception_v3`), "mean_pixel" or
/// "histogram".
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& id);

}  // namespace sigan::eval
