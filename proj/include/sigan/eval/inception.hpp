// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// Forward-only InceptionV3 feature network (the torchvision layout without
// the auxiliary head and classifier), returning the 2048-d pooled features.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sigan/eval/extractors.hpp"
#include "sigan/nn/layers.hpp"

namespace sigan::eval {

inline constexpr int kInceptionInputSize = 299;
inline constexpr int kInceptionFeatureDim = 2048;

class InceptionV3Extractor : public FeatureExtractor {
 public:
  /// Loads weights written by scripts/export_inception_weights.py. Array names
  /// follow the torchvision state dict ("Mixed_5b.branch1x1.conv.weight", ...).
  explicit InceptionV3Extractor(const std::filesystem::path& weights_dir);
  ~InceptionV3Extractor() override;

  std::string id() const override { return "inception_v3:avgpool_2048"; }
  int dim() const override { return kInceptionFeatureDim; }
  /// Gray [-1, 1] input is replicated to three channels and resized
  /// (bilinear) to 299 x 299; the network sees values on that same scale.
  std::vector<double> extract(const data::PixelGrid& image) const override;

  /// Features of a 3-channel N x 3 x 299 x 299 batch already on the network scale.
  Tensor<float> features(const Tensor<float>& x) const;

  /// Names and shapes of every array the network expects.
  static std::map<std::string, Shape> expected_arrays();

 private:
  struct Net;
  std::unique_ptr<Net> net_;
};

}  // namespace sigan::eval
