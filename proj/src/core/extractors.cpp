// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/eval/extractors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "sigan/eval/inception.hpp"

namespace sigan::eval {

std::vector<double> MeanPixelExtractor::extract(const data::PixelGrid& image) const {
  if (image.values.empty()) throw ShapeError("mean pixel extractor: empty image");
  double acc = 0;
  for (float v : image.values) acc += v;
  return {acc / static_cast<double>(image.values.size())};
}

HistogramExtractor::HistogramExtractor(int bins) : bins_(bins) {
  if (bins_ < 1) throw ConfigError("histogram extractor needs at least one bin");
}

std::vector<double> HistogramExtractor::extract(const data::PixelGrid& image) const {
  if (image.values.empty()) throw ShapeError("histogram extractor: empty image");
  std::vector<double> h(static_cast<std::size_t>(bins_), 0.0);
  for (float v : image.values) {
    const int k = std::clamp(static_cast<int>(std::floor((v + 1.0) / 2.0 * bins_)), 0, bins_ - 1);
    h[static_cast<std::size_t>(k)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(image.values.size());
  return h;
}

FeatureMatrix extract_features(const std::vector<data::ImageSample>& images,
                               const FeatureExtractor& extractor) {
  if (images.empty()) throw ConfigError("feature extraction needs at least one image");
  const int d = extractor.dim();
  FeatureMatrix out(static_cast<Eigen::Index>(images.size()), d);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto f = extractor.extract(images[i].pixels);
    if (static_cast<int>(f.size()) != d) {
      throw ShapeError(fmt::format("extractor {} returned {} values for {}, expected {}",
                                   extractor.id(), f.size(), images[i].id, d));
    }
    for (int j = 0; j < d; ++j) out(static_cast<Eigen::Index>(i), j) = f[static_cast<std::size_t>(j)];
  }
  return out;
}

std::filesystem::path cache_dir() {
  if (const char* env = std::getenv("SIGAN_CACHE"); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".cache" / "sigan";
  }
  return std::filesystem::path(".sigan_cache");
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& id) {
  if (id == "inception_v3" || id.rfind("inception_v3:", 0) == 0) {
    return std::make_unique<InceptionV3Extractor>(cache_dir() / "inception_v3");
  }
  if (id == "mean_pixel") return std::make_unique<MeanPixelExtractor>();
  if (id == "histogram") return std::make_unique<HistogramExtractor>();
  throw ConfigError("unknown extractor '" + id + "' (inception_v3|mean_pixel|histogram)");
}

}  // namespace sigan::eval
