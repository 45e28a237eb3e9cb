// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// Synthetic EL-like cells for tests: a smooth bright background with dark
// busbars, and defects painted at -1 with an exact ground-truth mask.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <fmt/format.h>

#include "sigan/data/dataset.hpp"
#include "sigan/seg/segmentation.hpp"

namespace sigan::testing {

struct SyntheticCell {
  data::PixelGrid clean;
  data::PixelGrid image;
  seg::BinaryMask mask;
};

inline data::PixelGrid cell_background(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> noise(-0.03f, 0.03f);
  std::uniform_real_distribution<float> tilt(-0.05f, 0.05f);
  const float ty = tilt(rng), tx = tilt(rng);
  data::PixelGrid g(size, size);
  const int bar = std::max(1, size / 64);
  const float c = (size - 1) / 2.0f;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const float r = std::hypot(y - c, x - c) / static_cast<float>(size);
      float v = 0.35f - 0.25f * r + ty * (y - c) / size + tx * (x - c) / size + noise(rng);
      for (int k = 1; k <= 3; ++k) {
        if (std::abs(x - k * size / 4) < bar) v = -0.2f;
      }
      g.at(y, x) = v;
    }
  }
  return g;
}

inline void paint_line(SyntheticCell& cell, double y0, double x0, double y1, double x1,
                       int thickness) {
  const double len = std::hypot(y1 - y0, x1 - x0);
  const int steps = std::max(1, static_cast<int>(len * 4));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const int yc = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    const int xc = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    for (int dy = 0; dy < thickness; ++dy) {
      for (int dx = 0; dx < thickness; ++dx) {
        const int y = yc + dy, x = xc + dx;
        if (y < 0 || x < 0 || y >= cell.image.height || x >= cell.image.width) continue;
        cell.image.at(y, x) = -1.0f;
        cell.mask.at(y, x) = 1;
      }
    }
  }
}

/// A straight crack of random orientation through the cell.
inline SyntheticCell crack_cell(int size, std::uint64_t seed) {
  SyntheticCell cell{cell_background(size, seed), {}, seg::BinaryMask(size, size)};
  cell.image = cell.clean;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> pos(size * 0.2, size * 0.8);
  std::uniform_real_distribution<double> angle(0.0, 3.14159265358979);
  std::uniform_real_distribution<double> length(size * 0.3, size * 0.6);
  const double y = pos(rng), x = pos(rng), a = angle(rng), l = length(rng);
  paint_line(cell, y - l / 2 * std::sin(a), x - l / 2 * std::cos(a), y + l / 2 * std::sin(a),
             x + l / 2 * std::cos(a), size >= 64 ? 2 : 1);
  return cell;
}

/// A short vertical break between busbars.
inline SyntheticCell finger_cell(int size, std::uint64_t seed) {
  SyntheticCell cell{cell_background(size, seed), {}, seg::BinaryMask(size, size)};
  cell.image = cell.clean;
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  std::uniform_int_distribution<int> col(1, size - 3);
  std::uniform_int_distribution<int> row(1, size / 2);
  const int x = col(rng), y = row(rng);
  paint_line(cell, y, x, y + std::max(2, size / 8), x, 2);
  return cell;
}

inline data::ImageSample as_sample(const std::string& id, const data::PixelGrid& g,
                                   data::DefectClass cls) {
  data::ImageSample s;
  s.id = id;
  s.domain = cls;
  s.pixels = g;
  s.original_height = g.height;
  s.original_width = g.width;
  return s;
}

/// Writes `<root>/{train,test}/<class>/*.png` plus ground-truth masks for the
/// test defects under `<root>/test/masks/<class>/`.
inline void write_synthetic_dataset(const std::filesystem::path& root, int per_class_train,
                                    int per_class_test, int size, std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::uint64_t k = seed * 1000003ULL;
  for (const auto* split : {"train", "test"}) {
    const int n = std::string(split) == "train" ? per_class_train : per_class_test;
    for (auto cls : data::kAllClasses) {
      const auto name = std::string(data::class_name(cls));
      fs::create_directories(root / split / name);
      for (int i = 0; i < n; ++i) {
        const std::string stem = fmt::format("{}_{}_{:03d}", split, name, i);
        SyntheticCell cell;
        if (cls == data::DefectClass::kDefectFree) {
          cell.clean = cell_background(size, ++k);
          cell.image = cell.clean;
          cell.mask = seg::BinaryMask(size, size);
        } else if (cls == data::DefectClass::kCrack) {
          cell = crack_cell(size, ++k);
        } else {
          cell = finger_cell(size, ++k);
        }
        data::write_gray_png(root / split / name / (stem + ".png"), data::to_gray8(cell.image));
        if (std::string(split) == "test" && cls != data::DefectClass::kDefectFree) {
          fs::create_directories(root / split / "masks" / name);
          seg::write_mask(root / split / "masks" / name / (stem + ".png"), cell.mask);
        }
      }
    }
  }
}

}  // namespace sigan::testing
