// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;

namespace sigan::data {

std::string_view class_name(DefectClass c) {
  switch (c) {
    case DefectClass::kDefectFree: return "defect_free";
    case DefectClass::kCrack: return "crack";
    case DefectClass::kFingerInterruption: return "finger_interruption";
  }
  return "defect_free";
}

DefectClass parse_class(std::string_view name) {
  for (DefectClass c : kAllClasses) {
    if (class_name(c) == name) return c;
  }
  throw ConfigError("unknown class '" + std::string(name) +
                    "' (defect_free|crack|finger_interruption)");
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kReal: return "real";
    case Provenance::kGenerated: return "generated";
    case Provenance::kOfflineAugmented: return "offline_augmented";
  }
  return "real";
}

std::string_view split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(name) + "' (train|test)");
}

std::map<DefectClass, std::size_t> DomainCollection::counts() const {
  std::map<DefectClass, std::size_t> out{{DefectClass::kDefectFree, defect_free.size()},
                                         {DefectClass::kCrack, 0},
                                         {DefectClass::kFingerInterruption, 0}};
  for (const auto& s : defective) ++out[s.domain];
  return out;
}

std::vector<const ImageSample*> DomainCollection::defective_of(DefectClass cls) const {
  std::vector<const ImageSample*> out;
  for (const auto& s : defective) {
    if (cls == DefectClass::kDefectFree || s.domain == cls) out.push_back(&s);
  }
  return out;
}

std::vector<const ImageSample*> DomainCollection::defect_free_view() const {
  std::vector<const ImageSample*> out;
  for (const auto& s : defect_free) out.push_back(&s);
  return out;
}

// ---------------------------------------------------------------------------
// Pixel mapping

std::uint8_t denormalize_value(float p) {
  const double v = std::round((static_cast<double>(p) + 1.0) * 255.0 / 2.0);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::vector<float> resize_bilinear(const std::vector<float>& src, int src_h, int src_w, int dst_h,
                                   int dst_w) {
  if (src_h == dst_h && src_w == dst_w) return src;
  std::vector<float> dst(static_cast<std::size_t>(dst_h) * dst_w);
  const double sy_scale = static_cast<double>(src_h) / dst_h;
  const double sx_scale = static_cast<double>(src_w) / dst_w;
  for (int y = 0; y < dst_h; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, src_h - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, src_w - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double fx = sx - x0;
      const auto px = [&](int yy, int xx) {
        return static_cast<double>(src[static_cast<std::size_t>(yy) * src_w + xx]);
      };
      const double top = px(y0, x0) * (1 - fx) + px(y0, x1) * fx;
      const double bottom = px(y1, x0) * (1 - fx) + px(y1, x1) * fx;
      dst[static_cast<std::size_t>(y) * dst_w + x] = static_cast<float>(top * (1 - fy) + bottom * fy);
    }
  }
  return dst;
}

PixelGrid preprocess(const GrayImage8& raw, int size) {
  if (raw.height < 2 || raw.width < 2) {
    throw ShapeError("image must be at least 2x2, got " + std::to_string(raw.height) + "x" +
                     std::to_string(raw.width));
  }
  if (raw.values.size() != static_cast<std::size_t>(raw.height) * raw.width) {
    throw ShapeError("image buffer does not match its declared size");
  }
  std::vector<float> src(raw.values.begin(), raw.values.end());
  PixelGrid out;
  out.height = size;
  out.width = size;
  out.values = resize_bilinear(src, raw.height, raw.width, size, size);
  for (float& v : out.values) v = std::clamp(normalize_value(v), -1.0f, 1.0f);
  return out;
}

GrayImage8 to_gray8(const PixelGrid& grid) {
  GrayImage8 out{grid.height, grid.width, {}};
  out.values.reserve(grid.size());
  for (float v : grid.values) out.values.push_back(denormalize_value(v));
  return out;
}

// ---------------------------------------------------------------------------
// Image files

GrayImage8 read_gray_image(const fs::path& file) {
  cv::Mat m = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("cannot decode image " + file.string());
  if (m.depth() == CV_16U) {
    spdlog::warn("{}: 16-bit image scaled to 8 bits", file.string());
    m.convertTo(m, CV_8U, 1.0 / 257.0);
  } else if (m.depth() != CV_8U) {
    throw IoError(file.string() + ": unsupported pixel depth");
  }
  GrayImage8 out{m.rows, m.cols, {}};
  out.values.resize(static_cast<std::size_t>(m.rows) * m.cols);
  const int channels = m.channels();
  if (channels > 1) {
    spdlog::warn("{}: {}-channel image converted to gray by channel average", file.string(),
                 channels);
  }
  const int used = channels == 4 ? 3 : channels;
  for (int y = 0; y < m.rows; ++y) {
    const std::uint8_t* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      int acc = 0;
      for (int c = 0; c < used; ++c) acc += row[x * channels + c];
      out.values[static_cast<std::size_t>(y) * m.cols + x] =
          static_cast<std::uint8_t>((acc + used / 2) / used);
    }
  }
  return out;
}

void write_gray_png(const fs::path& file, const GrayImage8& image) {
  cv::Mat m(image.height, image.width, CV_8UC1,
            const_cast<std::uint8_t*>(image.values.data()));
  bool ok = false;
  try {
    ok = cv::imwrite(file.string(), m);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + file.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + file.string());
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> list_images(const fs::path& dir, bool recursive) {
  std::vector<fs::path> files;
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
    }
  } else {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::set<fs::path> generated_files(const fs::path& split_dir) {
  std::set<fs::path> out;
  const fs::path manifest = split_dir / "manifest.json";
  if (!fs::exists(manifest)) return out;
  std::ifstream in(manifest);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  for (const auto& e : j.value("entries", nlohmann::json::array())) {
    out.insert(fs::weakly_canonical(split_dir / e.at("output_path").get<std::string>()));
  }
  return out;
}

ImageSample load_sample(const fs::path& file, const std::string& id, DefectClass domain,
                        const LoadOptions& opts) {
  GrayImage8 raw = read_gray_image(file);
  ImageSample s;
  s.id = id;
  s.domain = domain;
  s.original_height = raw.height;
  s.original_width = raw.width;
  s.pixels = preprocess(raw, opts.image_size);
  s.provenance = Provenance::kReal;
  s.source_path = file.string();
  return s;
}

}  // namespace

DomainCollection load_dataset(const fs::path& root, Split split, const LoadOptions& opts) {
  if (!fs::is_directory(root)) throw DatasetLayoutError("dataset root not found: " + root.string());
  const fs::path split_dir = root / split_name(split);
  if (!fs::is_directory(split_dir)) {
    throw DatasetLayoutError("missing split directory: " + split_dir.string());
  }
  const auto generated = generated_files(split_dir);
  if (split == Split::kTest && !generated.empty()) {
    throw DatasetLayoutError("test split " + split_dir.string() +
                             " contains generated images; generated samples are train-only");
  }

  DomainCollection out;
  out.split = split;
  std::vector<std::string> failures;
  for (DefectClass cls : kAllClasses) {
    const fs::path dir = split_dir / class_name(cls);
    if (!fs::is_directory(dir)) {
      throw DatasetLayoutError("missing class directory: " + dir.string());
    }
    auto& target = cls == DefectClass::kDefectFree ? out.defect_free : out.defective;
    const auto files = list_images(dir, false);
    if (files.empty()) {
      throw ConfigError("empty domain: no images in " + dir.string());
    }
    for (const auto& file : files) {
      try {
        ImageSample s = load_sample(file, std::string(class_name(cls)) + "/" + file.stem().string(),
                                    cls, opts);
        if (generated.contains(fs::weakly_canonical(file))) s.provenance = Provenance::kGenerated;
        target.push_back(std::move(s));
      } catch (const Error& e) {
        failures.push_back(file.string() + " (" + e.what() + ")");
      }
    }
  }
  if (!failures.empty()) {
    std::string msg = "unreadable images:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw IoError(msg);
  }
  return out;
}

std::vector<ImageSample> load_image_dir(const fs::path& dir, DefectClass domain,
                                        const LoadOptions& opts) {
  if (!fs::is_directory(dir)) throw DatasetLayoutError("directory not found: " + dir.string());
  std::vector<ImageSample> out;
  for (const auto& file : list_images(dir, true)) {
    fs::path rel = fs::relative(file, dir);
    rel.replace_extension();
    out.push_back(load_sample(file, rel.generic_string(), domain, opts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Offline augmentation

PixelGrid mirror_horizontal(const PixelGrid& g) {
  PixelGrid out(g.height, g.width);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) out.at(y, x) = g.at(y, g.width - 1 - x);
  return out;
}

PixelGrid flip_vertical(const PixelGrid& g) {
  PixelGrid out(g.height, g.width);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) out.at(y, x) = g.at(g.height - 1 - y, x);
  return out;
}

PixelGrid contrast_stretch(const PixelGrid& g) {
  if (g.values.empty()) return g;
  const auto [lo_it, hi_it] = std::minmax_element(g.values.begin(), g.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return g;
  PixelGrid out = g;
  for (float& v : out.values) {
    v = static_cast<float>(std::clamp(2.0 * (v - lo) / (hi - lo) - 1.0, -1.0, 1.0));
  }
  return out;
}

std::vector<ImageSample> augment_offline(const std::vector<ImageSample>& defective,
                                         const OfflineAugmentOptions& opts) {
  std::vector<ImageSample> out = defective;
  auto derived = [](const ImageSample& src, const char* tag, PixelGrid pixels) {
    ImageSample s = src;
    s.id = src.id + "#" + tag;
    s.pixels = std::move(pixels);
    s.provenance = Provenance::kOfflineAugmented;
    return s;
  };
  for (const auto& s : defective) {
    if (opts.mirror) out.push_back(derived(s, "mirror", mirror_horizontal(s.pixels)));
    if (opts.flip) out.push_back(derived(s, "flip", flip_vertical(s.pixels)));
    if (opts.contrast) out.push_back(derived(s, "contrast", contrast_stretch(s.pixels)));
  }
  return out;
}

void check_disjoint(const DomainCollection& train, const DomainCollection& test) {
  std::set<std::string> ids;
  for (const auto* list : {&train.defect_free, &train.defective}) {
    for (const auto& s : *list) ids.insert(s.id);
  }
  for (const auto* list : {&test.defect_free, &test.defective}) {
    for (const auto& s : *list) {
      if (ids.contains(s.id)) {
        throw DatasetLayoutError("sample '" + s.id + "' appears in both train and test splits");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Sampling

Tensor<float> stack(const std::vector<const ImageSample*>& samples) {
  if (samples.empty()) throw ShapeError("cannot stack an empty sample list");
  const int h = samples.front()->pixels.height;
  const int w = samples.front()->pixels.width;
  Tensor<float> t({static_cast<int>(samples.size()), 1, h, w});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& px = samples[i]->pixels;
    if (px.height != h || px.width != w) {
      throw ShapeError("sample " + samples[i]->id + " has size " + std::to_string(px.height) + "x" +
                       std::to_string(px.width) + ", batch expects " + std::to_string(h) + "x" +
                       std::to_string(w));
    }
    std::copy(px.values.begin(), px.values.end(), t.sample(static_cast<int>(i)));
  }
  return t;
}

Tensor<float> stack(const std::vector<ImageSample>& samples) {
  std::vector<const ImageSample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return stack(ptrs);
}

UnpairedSampler::UnpairedSampler(std::vector<const ImageSample*> domain_a,
                                 std::vector<const ImageSample*> domain_b, int batch_size,
                                 std::uint64_t seed)
    : domains_{std::move(domain_a), std::move(domain_b)}, batch_size_(batch_size), seed_(seed) {
  if (batch_size_ < 1) throw ConfigError("batch size must be at least 1");
  for (int d = 0; d < 2; ++d) {
    const auto n = domains_[d].size();
    if (n == 0) throw ConfigError(std::string("empty domain ") + (d == 0 ? "A" : "B"));
    if (n < static_cast<std::size_t>(batch_size_)) {
      throw ConfigError("batch size " + std::to_string(batch_size_) + " exceeds domain " +
                        (d == 0 ? "A" : "B") + " size " + std::to_string(n));
    }
    if (n % batch_size_ != 0) {
      spdlog::info("domain {}: {} samples, last partial batch of {} dropped each pass",
                   d == 0 ? "A" : "B", n, n % batch_size_);
    }
  }
}

std::int64_t UnpairedSampler::steps_per_epoch() const {
  return static_cast<std::int64_t>(std::max(domains_[0].size(), domains_[1].size())) / batch_size_;
}

std::vector<std::size_t> UnpairedSampler::permutation(int domain, std::int64_t pass) const {
  std::vector<std::size_t> perm(domains_[domain].size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(domain), static_cast<std::uint32_t>(pass),
                    static_cast<std::uint32_t>(pass >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

std::vector<std::size_t> UnpairedSampler::pick(int domain, std::int64_t index) const {
  const std::int64_t per_pass = static_cast<std::int64_t>(domains_[domain].size()) / batch_size_;
  const auto perm = permutation(domain, index / per_pass);
  const std::size_t start = static_cast<std::size_t>(index % per_pass) * batch_size_;
  return {perm.begin() + static_cast<std::ptrdiff_t>(start),
          perm.begin() + static_cast<std::ptrdiff_t>(start + batch_size_)};
}

std::pair<std::vector<std::string>, std::vector<std::string>> UnpairedSampler::batch_ids(
    std::int64_t index) const {
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (std::size_t i : pick(0, index)) out.first.push_back(domains_[0][i]->id);
  for (std::size_t i : pick(1, index)) out.second.push_back(domains_[1][i]->id);
  return out;
}

BatchPair UnpairedSampler::batch(std::int64_t index) const {
  BatchPair bp;
  std::vector<const ImageSample*> a, b;
  for (std::size_t i : pick(0, index)) a.push_back(domains_[0][i]);
  for (std::size_t i : pick(1, index)) b.push_back(domains_[1][i]);
  bp.batch_a = stack(a);
  bp.batch_b = stack(b);
  for (const auto* s : a) bp.ids_a.push_back(s->id);
  for (const auto* s : b) bp.ids_b.push_back(s->id);
  bp.rng_state_tag = "seed=" + std::to_string(seed_) + ";batch=" + std::to_string(index);
  return bp;
}

}  // namespace sigan::data
