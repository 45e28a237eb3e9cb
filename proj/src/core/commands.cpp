// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <optional>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sigan/aug/augmentation.hpp"
#include "sigan/data/dataset.hpp"
#include "sigan/eval/extractors.hpp"
#include "sigan/eval/fid.hpp"
#include "sigan/models/checkpoint.hpp"
#include "sigan/seg/segmentation.hpp"
#include "sigan/train/config.hpp"
#include "sigan/train/trainer.hpp"

namespace fs = std::filesystem;

namespace sigan::app {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json round_numbers(const Json& j, int decimals) {
  if (j.is_number_float()) {
    const double scale = std::pow(10.0, decimals);
    const double v = j.get<double>();
    if (!std::isfinite(v)) return j;
    const double r = std::round(v * scale) / scale;
    return r == 0.0 ? 0.0 : r;
  }
  if (j.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : j.items()) out[k] = round_numbers(v, decimals);
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(round_numbers(v, decimals));
    return out;
  }
  return j;
}

Json RunManifest::to_json() const {
  return {{"command", command},
          {"tool_version", tool_version},
          {"seed", seed},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"config", config},
          {"artifacts", artifacts}};
}

void RunManifest::write(const fs::path& run_dir) const {
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw IoError("cannot create " + run_dir.string() + ": " + ec.message());
  const fs::path tmp = run_dir / (std::string(kRunManifestFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, run_dir / kRunManifestFile);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train", "segment", "augment", "evaluate-fid",
                                              "evaluate-seg"};
  return names;
}

namespace {

std::string need_string(const Json& req, const char* key) {
  if (!req.contains(key) || !req[key].is_string() || req[key].get<std::string>().empty()) {
    throw ConfigError(fmt::format("missing required argument '{}'", key));
  }
  return req[key].get<std::string>();
}

std::string opt_string(const Json& req, const char* key, const std::string& fallback = "") {
  if (!req.contains(key) || req[key].is_null()) return fallback;
  if (!req[key].is_string()) throw ConfigError(fmt::format("argument '{}' must be a string", key));
  return req[key].get<std::string>();
}

template <typename N>
N opt_number(const Json& req, const char* key, N fallback) {
  if (!req.contains(key) || req[key].is_null()) return fallback;
  if (!req[key].is_number()) throw ConfigError(fmt::format("argument '{}' must be a number", key));
  return req[key].get<N>();
}

bool opt_bool(const Json& req, const char* key, bool fallback = false) {
  if (!req.contains(key) || req[key].is_null()) return fallback;
  if (!req[key].is_boolean()) throw ConfigError(fmt::format("argument '{}' must be a boolean", key));
  return req[key].get<bool>();
}

void write_json_file(const fs::path& file, const Json& j) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

std::vector<std::string> list_artifacts(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == kRunManifestFile) continue;
    out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

struct Outcome {
  Json result;
  fs::path run_dir;
  Json config = Json::object();
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------

Outcome cmd_train(const Json& req) {
  const fs::path data_root = need_string(req, "data");
  const fs::path out = need_string(req, "out");
  train::ConfigMap file_entries;
  if (const auto cfg_path = opt_string(req, "config"); !cfg_path.empty()) {
    file_entries = train::read_config_file(cfg_path);
  }
  train::ConfigMap cli_entries;
  if (req.contains("overrides")) {
    for (const auto& [k, v] : req["overrides"].items()) {
      cli_entries[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  const train::TrainConfig cfg = train::resolve_config(file_entries, cli_entries);
  data::LoadOptions load;
  load.image_size = cfg.image_size;
  const auto collection = data::load_dataset(data_root, data::Split::kTrain, load);
  train::TrainOptions opts;
  opts.resume = opt_bool(req, "resume");
  opts.max_steps = opt_number<std::int64_t>(req, "max_steps", -1);
  const auto r = train::train(cfg, collection, out, opts);

  Json checkpoints = Json::array();
  for (const auto& c : r.checkpoints) checkpoints.push_back(fs::relative(c, out).generic_string());
  Json final_losses = Json::object();
  if (!r.history.empty()) final_losses = Json::parse(r.history.back().losses.to_json());
  Outcome o;
  o.run_dir = out;
  o.config = cfg.to_json();
  o.seed = cfg.seed;
  o.result = {{"epochs_completed", r.epochs_completed},
              {"epochs_scheduled", cfg.total_epochs()},
              {"steps", r.steps},
              {"checkpoints", std::move(checkpoints)},
              {"log", fs::relative(r.log_file, out).generic_string()},
              {"final_losses", std::move(final_losses)}};
  return o;
}

std::vector<data::ImageSample> load_inputs(const fs::path& input, int image_size) {
  data::LoadOptions load;
  load.image_size = image_size;
  if (fs::is_regular_file(input)) {
    const auto raw = data::read_gray_image(input);
    data::ImageSample s;
    s.id = input.stem().string();
    s.domain = data::DefectClass::kCrack;
    s.original_height = raw.height;
    s.original_width = raw.width;
    s.pixels = data::preprocess(raw, image_size);
    s.source_path = input.string();
    return {s};
  }
  auto samples = data::load_image_dir(input, data::DefectClass::kCrack, load);
  std::erase_if(samples, [](const data::ImageSample& s) { return s.id.rfind("masks/", 0) == 0; });
  if (samples.empty()) throw DatasetLayoutError("no images found under " + input.string());
  return samples;
}

data::GrayImage8 diff_to_gray(const data::PixelGrid& diff) {
  data::GrayImage8 img{diff.height, diff.width, {}};
  for (float v : diff.values) {
    img.values.push_back(
        static_cast<std::uint8_t>(std::clamp(std::round(v / 2.0 * 255.0), 0.0, 255.0)));
  }
  return img;
}

Outcome cmd_segment(const Json& req) {
  const fs::path checkpoint = need_string(req, "checkpoint");
  const fs::path input = need_string(req, "input");
  const fs::path out = need_string(req, "out");
  seg::ThresholdConfig tc;
  const bool has_threshold = req.contains("threshold") && !req["threshold"].is_null();
  const bool otsu = opt_bool(req, "otsu");
  if (has_threshold && otsu) throw ConfigError("--threshold and --otsu are mutually exclusive");
  if (has_threshold) {
    tc.mode = seg::ThresholdMode::kFixed;
    tc.value = opt_number<double>(req, "threshold", 0.5);
    if (!(tc.value >= 0 && tc.value <= seg::kMaxDifference)) {
      throw ConfigError("threshold must lie in [0, 2]");
    }
  }
  tc.polarity = seg::parse_polarity(opt_string(req, "polarity", "absolute"));
  tc.min_component_area = opt_number<int>(req, "min_area", 0);
  if (tc.min_component_area < 0) throw ConfigError("min_area must be >= 0");
  const bool original_size = opt_bool(req, "original_size");
  const std::string gt = opt_string(req, "gt");

  const auto g = models::load_generator(
      models::resolve_generator_dir(checkpoint, models::GeneratorRole::kF));
  const seg::GeneratorTranslator f(*g);
  if (f.role() != models::GeneratorRole::kF) {
    throw RoleError("checkpoint " + checkpoint.string() + " holds generator " +
                    std::string(models::role_name(f.role())) + "; segmentation needs " +
                    std::string(models::role_name(models::GeneratorRole::kF)));
  }
  if (!gt.empty() && !fs::is_directory(gt)) {
    throw DatasetLayoutError("ground-truth directory not found: " + gt);
  }
  const auto samples = load_inputs(input, g->arch().image_size);
  ensure_dir(out / "masks");
  ensure_dir(out / "diff");
  ensure_dir(out / "generated");

  Json images = Json::array();
  std::vector<std::pair<std::string, seg::SegMetrics>> metrics;
  for (const auto& s : samples) {
    const auto r = seg::segment(s, f, tc);
    seg::BinaryMask mask = r.mask;
    if (original_size) mask = seg::resize_nearest(mask, s.original_height, s.original_width);
    const fs::path mask_file = out / "masks" / (s.id + ".png");
    const fs::path diff_file = out / "diff" / (s.id + ".png");
    const fs::path generated_file = out / "generated" / (s.id + ".png");
    for (const auto& file : {mask_file, diff_file, generated_file}) ensure_dir(file.parent_path());
    seg::write_mask(mask_file, mask);
    data::write_gray_png(diff_file, diff_to_gray(r.diff_map));
    data::write_gray_png(generated_file, data::to_gray8(r.generated));
    Json entry{{"id", s.id},
               {"threshold", r.threshold_used},
               {"mask_pixels", mask.count()}};
    if (!gt.empty()) {
      const fs::path gt_file = fs::path(gt) / (s.id + ".png");
      if (!fs::exists(gt_file)) throw IoError("ground-truth mask missing: " + gt_file.string());
      const auto truth = seg::read_mask(gt_file, mask.height, mask.width);
      const auto m = seg::evaluate_masks(mask, truth);
      entry["metrics"] = m.to_json();
      metrics.emplace_back(s.id, m);
    }
    images.push_back(std::move(entry));
  }

  Json report{{"checkpoint", checkpoint.string()},
              {"threshold_mode", seg::threshold_mode_name(tc.mode)},
              {"polarity", seg::polarity_name(tc.polarity)},
              {"images", images}};
  Outcome o;
  o.run_dir = out;
  o.config = req;
  o.result = {{"images", samples.size()}, {"threshold_mode", seg::threshold_mode_name(tc.mode)}};
  if (!gt.empty()) {
    const auto agg = seg::aggregate(metrics);
    const Json summary{{"micro", agg.micro.to_json()},
                       {"macro",
                        {{"cpt", agg.macro_cpt}, {"crt", agg.macro_crt}, {"fscore", agg.macro_fscore}}}};
    report["aggregate"] = summary;
    o.result["cpt"] = agg.micro.cpt;
    o.result["crt"] = agg.micro.crt;
    o.result["fscore"] = agg.micro.fscore;
    o.result["macro"] = summary["macro"];
  }
  write_json_file(out / "segmentation.json", round_numbers(report));
  return o;
}

Outcome cmd_augment(const Json& req) {
  const fs::path checkpoint = need_string(req, "checkpoint");
  const fs::path data_root = need_string(req, "data");
  const fs::path out = need_string(req, "out");
  if (!req.contains("count")) throw ConfigError("missing required argument 'count'");
  const auto count = opt_number<std::int64_t>(req, "count", 0);

  models::CheckpointInfo info;
  const fs::path gdir = models::resolve_generator_dir(checkpoint, models::GeneratorRole::kG);
  const auto g = models::load_generator(gdir, &info);
  data::DefectClass cls = data::DefectClass::kCrack;
  if (const auto c = opt_string(req, "class"); !c.empty()) {
    cls = data::parse_class(c);
  } else if (info.config.contains("defect_class")) {
    cls = data::parse_class(info.config["defect_class"].get<std::string>());
  }
  data::LoadOptions load;
  load.image_size = g->arch().image_size;
  const auto base = data::load_dataset(data_root, data::Split::kTrain, load);

  aug::GenerateOptions opts;
  opts.target_class = cls;
  opts.count = count;
  opts.with_replacement = opt_bool(req, "with_replacement");
  opts.seed = opt_number<std::uint64_t>(req, "seed", 0);
  opts.overwrite = opt_bool(req, "overwrite");
  opts.checkpoint_label = gdir.string();
  const seg::GeneratorTranslator translator(*g);
  const auto manifest = aug::generate_defective(base.defect_free, translator, opts, out);

  const bool into_train =
      fs::weakly_canonical(out) == fs::weakly_canonical(data_root / data::split_name(data::Split::kTrain));
  const auto merged = into_train ? data::load_dataset(data_root, data::Split::kTrain, load)
                                 : aug::merge_dataset(base, manifest, out, load.image_size);
  Json counts = Json::object();
  for (const auto& [c, n] : aug::provenance_counts(merged)) {
    counts[std::string(data::class_name(c))] = {{"real", n.real}, {"fake", n.fake}};
  }
  Outcome o;
  o.run_dir = out;
  o.config = req;
  o.seed = opts.seed;
  o.result = {{"written", manifest.entries.size()},
              {"class", data::class_name(cls)},
              {"manifest", (out / aug::kManifestFile).string()},
              {"train_counts", std::move(counts)}};
  return o;
}

void write_features_csv(const fs::path& file, const eval::FeatureMatrix& f) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) out << (j ? "," : "") << fmt::format("{:.9g}", f(i, j));
    out << '\n';
  }
}

Outcome cmd_evaluate_fid(const Json& req) {
  const fs::path real = need_string(req, "real");
  const fs::path fake = need_string(req, "fake");
  const fs::path out = opt_string(req, "out", "sigan-runs/evaluate-fid");
  const auto extractor = eval::make_extractor(opt_string(req, "extractor", "inception_v3"));
  const auto real_images = data::load_image_dir(real, data::DefectClass::kDefectFree);
  const auto fake_images = data::load_image_dir(fake, data::DefectClass::kDefectFree);
  const auto fr = eval::extract_features(real_images, *extractor);
  const auto ff = eval::extract_features(fake_images, *extractor);
  const auto report = eval::fid(fr, ff, extractor->id());
  ensure_dir(out);
  if (opt_bool(req, "dump_features")) {
    write_features_csv(out / "real_features.csv", fr);
    write_features_csv(out / "fake_features.csv", ff);
  }
  Json result = report.to_json();
  if (std::min(report.stats_real.n, report.stats_fake.n) <= report.stats_real.dim()) {
    result["note"] = "sample count does not exceed the feature dimension; the score is biased";
  }
  write_json_file(out / "fid.json", round_numbers(result));
  Outcome o;
  o.run_dir = out;
  o.config = req;
  o.result = std::move(result);
  return o;
}

Outcome cmd_evaluate_seg(const Json& req) {
  const fs::path pred = need_string(req, "pred");
  const fs::path gt = need_string(req, "gt");
  const fs::path out = opt_string(req, "out", "sigan-runs/evaluate-seg");
  if (!fs::is_directory(pred)) throw DatasetLayoutError("prediction directory not found: " + pred.string());
  if (!fs::is_directory(gt)) throw DatasetLayoutError("ground-truth directory not found: " + gt.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(pred)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DatasetLayoutError("no predicted masks under " + pred.string());
  std::vector<std::pair<std::string, seg::SegMetrics>> metrics;
  for (const auto& file : files) {
    fs::path rel = fs::relative(file, pred);
    const fs::path gt_file = gt / rel;
    if (!fs::exists(gt_file)) throw IoError("ground-truth mask missing: " + gt_file.string());
    const auto p = seg::read_mask(file);
    const auto t = seg::read_mask(gt_file, p.height, p.width);
    rel.replace_extension();
    metrics.emplace_back(rel.generic_string(), seg::evaluate_masks(p, t));
  }
  const auto agg = seg::aggregate(std::move(metrics));
  ensure_dir(out);
  write_json_file(out / "seg_metrics.json", round_numbers(agg.to_json()));
  Outcome o;
  o.run_dir = out;
  o.config = req;
  o.result = {{"images", agg.per_image.size()},
              {"cpt", agg.micro.cpt},
              {"crt", agg.micro.crt},
              {"fscore", agg.micro.fscore},
              {"macro", {{"cpt", agg.macro_cpt}, {"crt", agg.macro_crt}, {"fscore", agg.macro_fscore}}}};
  return o;
}

}  // namespace

Json run_command(const std::string& command, const Json& request) {
  if (!request.is_object()) throw ConfigError("request must be a JSON object");
  RunManifest manifest;
  manifest.command = command;
  manifest.tool_version = SIGAN_VERSION;
  manifest.started_at = utc_timestamp();
  Outcome o;
  if (command == "train") {
    o = cmd_train(request);
  } else if (command == "segment") {
    o = cmd_segment(request);
  } else if (command == "augment") {
    o = cmd_augment(request);
  } else if (command == "evaluate-fid") {
    o = cmd_evaluate_fid(request);
  } else if (command == "evaluate-seg") {
    o = cmd_evaluate_seg(request);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown command '" + command + "'");
  }
  manifest.finished_at = utc_timestamp();
  manifest.config = o.config;
  manifest.seed = o.seed;
  manifest.artifacts = list_artifacts(o.run_dir);
  manifest.write(o.run_dir);
  Json result = round_numbers(o.result);
  result["run_manifest"] = (o.run_dir / kRunManifestFile).string();
  return result;
}

}  // namespace sigan::app
