// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/seg/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

namespace sigan::seg {

std::string_view threshold_mode_name(ThresholdMode m) {
  return m == ThresholdMode::kFixed ? "fixed" : "otsu";
}

std::string_view polarity_name(Polarity p) {
  return p == Polarity::kAbsolute ? "absolute" : "signed";
}

Polarity parse_polarity(std::string_view name) {
  if (name == "absolute") return Polarity::kAbsolute;
  if (name == "signed") return Polarity::kSigned;
  throw ConfigError("unknown polarity '" + std::string(name) + "' (absolute|signed)");
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

Tensor<float> GeneratorTranslator::translate(const Tensor<float>& image) const {
  const Shape& s = image.shape();
  const int cin = g_.arch().in_channels;
  Tensor<float> x({s.n, cin, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < cin; ++c) {
      std::copy(image.sample(n), image.sample(n) + s.plane(), x.sample(n) + c * s.plane());
    }
  }
  const Tensor<float> y = g_.infer(x);
  const int cout = y.shape().c;
  if (cout == 1) return y;
  Tensor<float> out({s.n, 1, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < s.plane(); ++i) {
      double acc = 0;
      for (int c = 0; c < cout; ++c) acc += y.sample(n)[c * s.plane() + i];
      out.sample(n)[i] = static_cast<float>(acc / cout);
    }
  }
  return out;
}

data::PixelGrid difference_map(const data::PixelGrid& input, const data::PixelGrid& generated,
                               Polarity polarity) {
  if (input.height != generated.height || input.width != generated.width) {
    throw ShapeError("difference map: input " + std::to_string(input.height) + "x" +
                     std::to_string(input.width) + " vs generated " +
                     std::to_string(generated.height) + "x" + std::to_string(generated.width));
  }
  data::PixelGrid out(input.height, input.width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float d = input.values[i] - generated.values[i];
    out.values[i] = polarity == Polarity::kAbsolute ? std::abs(d) : std::max(d, 0.0f);
  }
  return out;
}

double otsu_threshold(const data::PixelGrid& diff) {
  if (diff.values.empty()) throw ShapeError("otsu threshold: empty difference map");
  std::array<double, kOtsuBins> hist{};
  for (float v : diff.values) {
    const int k = std::clamp(static_cast<int>(std::floor(v / kMaxDifference * kOtsuBins)), 0,
                             kOtsuBins - 1);
    hist[k] += 1;
  }
  const double total = static_cast<double>(diff.values.size());
  const double width = kMaxDifference / kOtsuBins;
  double sum_all = 0;
  for (int k = 0; k < kOtsuBins; ++k) sum_all += hist[k] * (k + 0.5) * width;

  double best = 0;
  int best_k = -1;
  double w0 = 0, sum0 = 0;
  for (int k = 0; k < kOtsuBins - 1; ++k) {
    w0 += hist[k];
    sum0 += hist[k] * (k + 0.5) * width;
    const double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double between = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  if (best_k < 0) {
    const double top = *std::max_element(diff.values.begin(), diff.values.end());
    spdlog::warn("otsu threshold: difference map has no two-class split, using its maximum {:.4f}",
                 top);
    return top;
  }
  return (best_k + 1) * width;
}

double threshold_select(const data::PixelGrid& diff, const ThresholdConfig& cfg) {
  if (cfg.mode == ThresholdMode::kFixed) {
    if (!std::isfinite(cfg.value)) throw ConfigError("fixed threshold must be finite");
    return cfg.value;
  }
  return otsu_threshold(diff);
}

BinaryMask apply_threshold(const data::PixelGrid& diff, double threshold) {
  BinaryMask mask(diff.height, diff.width);
  for (std::size_t i = 0; i < diff.size(); ++i) mask.values[i] = diff.values[i] > threshold ? 1 : 0;
  return mask;
}

void remove_small_components(BinaryMask& mask, int min_area) {
  if (min_area <= 1 || mask.values.empty()) return;
  cv::Mat m(mask.height, mask.width, CV_8UC1, mask.values.data());
  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(m, labels, stats, centroids, 8, CV_32S);
  for (int y = 0; y < mask.height; ++y) {
    const int* row = labels.ptr<int>(y);
    for (int x = 0; x < mask.width; ++x) {
      const int label = row[x];
      if (label > 0 && label < n && stats.at<int>(label, cv::CC_STAT_AREA) < min_area) {
        mask.at(y, x) = 0;
      }
    }
  }
}

SegmentationResult segment(const data::ImageSample& defective, const ImageTranslator& f,
                           const ThresholdConfig& cfg) {
  if (f.role() != models::GeneratorRole::kF) {
    throw RoleError("segmentation needs the defect-to-defect-free generator (" +
                    std::string(models::role_name(models::GeneratorRole::kF)) + "), got " +
                    std::string(models::role_name(f.role())));
  }
  const auto& px = defective.pixels;
  Tensor<float> x({1, 1, px.height, px.width}, px.values);
  const Tensor<float> y = f.translate(x);
  if (y.shape() != x.shape()) {
    throw ShapeError("translator returned " + y.shape().str() + " for input " + x.shape().str());
  }
  data::PixelGrid generated(px.height, px.width);
  generated.values = y.vec();

  SegmentationResult r;
  r.input_id = defective.id;
  r.diff_map = difference_map(px, generated, cfg.polarity);
  r.generated = std::move(generated);
  r.threshold_mode = cfg.mode;
  r.threshold_used = threshold_select(r.diff_map, cfg);
  r.mask = apply_threshold(r.diff_map, r.threshold_used);
  remove_small_components(r.mask, cfg.min_component_area);
  return r;
}

// ---------------------------------------------------------------------------
// Metrics

SegMetrics SegMetrics::from_counts(std::int64_t m_g, std::int64_t m_d, std::int64_t m) {
  if (m_g < 0 || m_d < 0 || m < 0 || m > std::min(m_g, m_d)) {
    throw ConfigError("inconsistent mask counts m_g=" + std::to_string(m_g) +
                      " m_d=" + std::to_string(m_d) + " m=" + std::to_string(m));
  }
  SegMetrics s{m_g, m_d, m, 0, 0, 0};
  if (m_g == 0 && m_d == 0) {
    s.cpt = s.crt = s.fscore = 1.0;
    return s;
  }
  s.cpt = m_g > 0 ? static_cast<double>(m) / static_cast<double>(m_g) : 0.0;
  s.crt = m_d > 0 ? static_cast<double>(m) / static_cast<double>(m_d) : 0.0;
  s.fscore = s.cpt + s.crt > 0 ? 2.0 * s.cpt * s.crt / (s.cpt + s.crt) : 0.0;
  return s;
}

nlohmann::ordered_json SegMetrics::to_json() const {
  return {{"m_g", m_g}, {"m_d", m_d}, {"m", m}, {"cpt", cpt}, {"crt", crt}, {"fscore", fscore}};
}

SegMetrics evaluate_masks(const BinaryMask& predicted, const BinaryMask& ground_truth) {
  if (predicted.height != ground_truth.height || predicted.width != ground_truth.width) {
    throw ShapeError("mask shapes differ: predicted " + std::to_string(predicted.height) + "x" +
                     std::to_string(predicted.width) + ", ground truth " +
                     std::to_string(ground_truth.height) + "x" + std::to_string(ground_truth.width));
  }
  std::int64_t m_g = 0, m_d = 0, m = 0;
  for (std::size_t i = 0; i < predicted.values.size(); ++i) {
    const bool p = predicted.values[i] != 0;
    const bool g = ground_truth.values[i] != 0;
    m_g += g;
    m_d += p;
    m += p && g;
  }
  return SegMetrics::from_counts(m_g, m_d, m);
}

SegReport aggregate(std::vector<std::pair<std::string, SegMetrics>> per_image) {
  std::sort(per_image.begin(), per_image.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  SegReport r;
  std::int64_t m_g = 0, m_d = 0, m = 0;
  for (const auto& [id, s] : per_image) {
    m_g += s.m_g;
    m_d += s.m_d;
    m += s.m;
    r.macro_cpt += s.cpt;
    r.macro_crt += s.crt;
    r.macro_fscore += s.fscore;
  }
  r.micro = SegMetrics::from_counts(m_g, m_d, m);
  if (!per_image.empty()) {
    const double n = static_cast<double>(per_image.size());
    r.macro_cpt /= n;
    r.macro_crt /= n;
    r.macro_fscore /= n;
  }
  r.per_image = std::move(per_image);
  return r;
}

nlohmann::ordered_json SegReport::to_json() const {
  nlohmann::ordered_json images = nlohmann::ordered_json::array();
  for (const auto& [id, s] : per_image) {
    auto j = s.to_json();
    j["id"] = id;
    images.push_back(std::move(j));
  }
  return {{"images", per_image.size()},
          {"micro", micro.to_json()},
          {"macro", {{"cpt", macro_cpt}, {"crt", macro_crt}, {"fscore", macro_fscore}}},
          {"per_image", std::move(images)}};
}

BinaryMask resize_nearest(const BinaryMask& mask, int height, int width) {
  if (mask.height == height && mask.width == width) return mask;
  BinaryMask out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height - 1, static_cast<int>((y + 0.5) * mask.height / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width - 1, static_cast<int>((x + 0.5) * mask.width / width));
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

BinaryMask read_mask(const std::filesystem::path& file, int height, int width) {
  const data::GrayImage8 img = data::read_gray_image(file);
  BinaryMask mask(img.height, img.width);
  for (std::size_t i = 0; i < img.values.size(); ++i) mask.values[i] = img.values[i] != 0;
  if (height > 0 && width > 0) return resize_nearest(mask, height, width);
  return mask;
}

void write_mask(const std::filesystem::path& file, const BinaryMask& mask) {
  data::GrayImage8 img{mask.height, mask.width, {}};
  img.values.reserve(mask.values.size());
  for (auto v : mask.values) img.values.push_back(v ? 255 : 0);
  data::write_gray_png(file, img);
}

}  // namespace sigan::seg
