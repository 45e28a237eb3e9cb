// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/aug/augmentation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace fs = std::filesystem;

namespace sigan::aug {

using Json = nlohmann::ordered_json;

Json AugmentationManifest::to_json() const {
  Json entries_json = Json::array();
  for (const auto& e : entries) {
    entries_json.push_back({{"output_path", e.output_path},
                            {"source_id", e.source_id},
                            {"generator_checkpoint", e.generator_checkpoint},
                            {"target_class", data::class_name(e.target_class)},
                            {"provenance", data::provenance_name(e.provenance)}});
  }
  Json counts_json = Json::object();
  for (const auto& [cls, c] : counts) {
    counts_json[std::string(data::class_name(cls))] = {{"real", c.real}, {"fake", c.fake}};
  }
  return {{"format_version", 1},
          {"seed", seed},
          {"counts", std::move(counts_json)},
          {"entries", std::move(entries_json)}};
}

AugmentationManifest AugmentationManifest::from_json(const Json& j) {
  AugmentationManifest m;
  m.seed = j.value("seed", std::uint64_t{0});
  for (const auto& e : j.at("entries")) {
    ManifestEntry entry;
    entry.output_path = e.at("output_path").get<std::string>();
    entry.source_id = e.at("source_id").get<std::string>();
    entry.generator_checkpoint = e.value("generator_checkpoint", std::string());
    entry.target_class = data::parse_class(e.at("target_class").get<std::string>());
    if (e.value("provenance", std::string("generated")) != "generated") {
      throw IoError("manifest entry " + entry.output_path + " is not marked generated");
    }
    m.entries.push_back(std::move(entry));
  }
  const Json counts = j.value("counts", Json::object());
  for (const auto& [name, c] : counts.items()) {
    m.counts[data::parse_class(name)] = {c.at("real").get<std::size_t>(),
                                         c.at("fake").get<std::size_t>()};
  }
  return m;
}

void AugmentationManifest::write(const fs::path& dir) const {
  const fs::path tmp = dir / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, dir / kManifestFile);
}

AugmentationManifest AugmentationManifest::read(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest " + file.string());
  try {
    return from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + file.string() + ": " + e.what());
  }
}

namespace {

void probe_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("output directory " + dir.string() + " is not writable: " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe, std::ios::trunc);
    if (!out || !(out << "probe")) {
      throw IoError("output directory " + dir.string() + " is not writable");
    }
  }
  fs::remove(probe, ec);
}

std::string stem_of(const std::string& id) {
  std::string stem = id;
  if (const auto slash = stem.find('/'); slash != std::string::npos) stem.erase(0, slash + 1);
  std::replace(stem.begin(), stem.end(), '/', '_');
  return stem;
}

}  // namespace

AugmentationManifest generate_defective(const std::vector<data::ImageSample>& defect_free,
                                        const seg::ImageTranslator& g, const GenerateOptions& opts,
                                        const fs::path& out_dir) {
  if (g.role() != models::GeneratorRole::kG) {
    throw RoleError("augmentation needs the defect-free-to-defect generator (" +
                    std::string(models::role_name(models::GeneratorRole::kG)) + "), got " +
                    std::string(models::role_name(g.role())));
  }
  if (opts.target_class == data::DefectClass::kDefectFree) {
    throw ConfigError("target class must be a defect class");
  }
  if (opts.count < 0) throw ConfigError("count must be >= 0");
  const auto pool = static_cast<std::int64_t>(defect_free.size());
  if (opts.count > pool && !opts.with_replacement) {
    throw ConfigError(fmt::format("count {} exceeds the {} available defect-free images; "
                                  "enable sampling with replacement",
                                  opts.count, pool));
  }
  if (opts.count > 0 && pool == 0) throw ConfigError("no defect-free images to translate");
  if (fs::exists(out_dir / kManifestFile) && !opts.overwrite) {
    throw IoError("output directory " + out_dir.string() + " already holds a manifest");
  }
  const fs::path class_dir = out_dir / data::class_name(opts.target_class);
  probe_writable(class_dir);

  std::vector<std::size_t> picks(static_cast<std::size_t>(pool));
  std::iota(picks.begin(), picks.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(opts.seed),
                    static_cast<std::uint32_t>(opts.seed >> 32), 0x61756775u};
  std::mt19937_64 rng(seq);
  std::shuffle(picks.begin(), picks.end(), rng);
  picks.resize(static_cast<std::size_t>(std::min(opts.count, pool)));
  if (opts.count > pool) {
    std::uniform_int_distribution<std::size_t> any(0, defect_free.size() - 1);
    for (std::int64_t i = pool; i < opts.count; ++i) picks.push_back(any(rng));
  }
  std::sort(picks.begin(), picks.end(), [&](std::size_t x, std::size_t y) {
    return defect_free[x].id != defect_free[y].id ? defect_free[x].id < defect_free[y].id : x < y;
  });

  AugmentationManifest manifest;
  manifest.seed = opts.seed;
  std::map<std::string, int> uses;
  for (std::size_t idx : picks) {
    const auto& src = defect_free[idx];
    const int k = uses[src.id]++;
    const std::string name = fmt::format("fake_{}_{}.png", stem_of(src.id), k);
    const auto& px = src.pixels;
    const Tensor<float> y = g.translate(Tensor<float>({1, 1, px.height, px.width}, px.values));
    data::PixelGrid out(px.height, px.width);
    out.values = y.vec();
    data::write_gray_png(class_dir / name, data::to_gray8(out));
    manifest.entries.push_back({std::string(data::class_name(opts.target_class)) + "/" + name,
                                src.id, opts.checkpoint_label, opts.target_class,
                                data::Provenance::kGenerated});
  }
  manifest.counts[opts.target_class].fake = manifest.entries.size();
  manifest.write(out_dir);
  spdlog::info("wrote {} generated {} images to {}", manifest.entries.size(),
               data::class_name(opts.target_class), class_dir.string());
  return manifest;
}

data::DomainCollection merge_dataset(const data::DomainCollection& base,
                                     const AugmentationManifest& manifest,
                                     const fs::path& manifest_dir, int image_size) {
  if (base.split == data::Split::kTest) {
    throw DatasetLayoutError("generated images cannot be merged into the test split");
  }
  data::DomainCollection out = base;
  std::set<std::string> ids;
  for (const auto& s : base.defective) ids.insert(s.id);
  for (const auto& e : manifest.entries) {
    const fs::path file = manifest_dir / e.output_path;
    if (!fs::exists(file)) {
      throw IoError("manifest entry '" + e.output_path + "' not found at " + file.string());
    }
    const data::GrayImage8 raw = data::read_gray_image(file);
    data::ImageSample s;
    s.id = std::string(data::class_name(e.target_class)) + "/" + fs::path(e.output_path).stem().string();
    if (!ids.insert(s.id).second) throw DatasetLayoutError("duplicate sample id '" + s.id + "'");
    s.domain = e.target_class;
    s.original_height = raw.height;
    s.original_width = raw.width;
    s.pixels = data::preprocess(raw, image_size);
    s.provenance = data::Provenance::kGenerated;
    s.source_path = file.string();
    out.defective.push_back(std::move(s));
  }
  return out;
}

std::map<data::DefectClass, ClassCounts> provenance_counts(const data::DomainCollection& c) {
  std::map<data::DefectClass, ClassCounts> out{{data::DefectClass::kCrack, {}},
                                               {data::DefectClass::kFingerInterruption, {}}};
  for (const auto& s : c.defective) {
    auto& counts = out[s.domain];
    (s.provenance == data::Provenance::kGenerated ? counts.fake : counts.real) += 1;
  }
  return out;
}

}  // namespace sigan::aug
