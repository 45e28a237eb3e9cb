// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// sigan-el: command-line front end over the C API.
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sigan/sigan.h"

namespace {

using nlohmann::ordered_json;

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else if (ch == '\n') {
      out += "\\n";
    } else {
      out += ch;
    }
  }
  return out;
}

int fail(const char* code, const std::string& message) {
  std::cerr << "error: code=" << code << " message=\"" << escape(message) << "\"\n";
  return 1;
}

struct Context {
  sigan_context* ctx = nullptr;
  Context() {
    if (sigan_context_create(&ctx) != SIGAN_OK) ctx = nullptr;
  }
  ~Context() { sigan_context_destroy(ctx); }
};

std::vector<std::string> config_keys(sigan_context* ctx) {
  char* keys = nullptr;
  if (sigan_config_keys(ctx, &keys) != SIGAN_OK) return {};
  auto j = ordered_json::parse(keys);
  sigan_string_free(keys);
  return j.get<std::vector<std::string>>();
}

template <typename T>
void put(ordered_json& req, const char* key, const std::optional<T>& v) {
  if (v) req[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  Context c;
  if (!c.ctx) return fail("internal", "cannot create library context");

  CLI::App app{"sigan-el: defect synthesis and segmentation for EL solar-cell images"};
  app.set_version_flag("--version", std::string(sigan_version()));
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug|info|warn|error|off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

  ordered_json req = ordered_json::object();
  std::string command;

  // train
  auto* train = app.add_subcommand("train", "Train the translation networks");
  std::string t_config, t_data, t_out;
  bool t_resume = false;
  long long t_max_steps = -1;
  train->add_option("--config", t_config, "Configuration file (key = value)");
  train->add_option("--data", t_data, "Dataset root")->required();
  train->add_option("--out", t_out, "Run directory")->required();
  train->add_flag("--resume", t_resume, "Continue from the latest checkpoint");
  train->add_option("--max-steps", t_max_steps)->group("");
  const auto keys = config_keys(c.ctx);
  std::map<std::string, std::string> overrides;
  for (const auto& k : keys) {
    train->add_option_function<std::string>(
        "--" + k, [&overrides, k](const std::string& v) { overrides[k] = v; },
        "Overrides config key " + k)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  // segment
  auto* segment = app.add_subcommand("segment", "Segment defects with the F generator");
  std::string s_ck, s_input, s_out, s_gt, s_polarity = "absolute";
  std::optional<double> s_threshold;
  bool s_otsu = false, s_original = false;
  int s_min_area = 0;
  segment->add_option("--checkpoint", s_ck, "Generator, checkpoint or run directory")->required();
  segment->add_option("--input", s_input, "Image file or directory")->required();
  segment->add_option("--out", s_out, "Output directory")->required();
  auto* thr = segment->add_option("--threshold", s_threshold, "Fixed threshold in [0, 2]");
  auto* otsu = segment->add_flag("--otsu", s_otsu, "Otsu threshold per image (default)");
  thr->excludes(otsu);
  segment->add_option("--gt", s_gt, "Ground-truth mask directory");
  segment->add_option("--polarity", s_polarity, "absolute|signed")
      ->check(CLI::IsMember({"absolute", "signed"}));
  segment->add_option("--min-area", s_min_area, "Drop components smaller than this");
  segment->add_flag("--original-size", s_original, "Resize masks back to the input size");

  // augment
  auto* augment = app.add_subcommand("augment", "Synthesize defective images with G");
  std::string a_ck, a_data, a_out, a_class;
  long long a_count = 0;
  unsigned long long a_seed = 0;
  bool a_replace = false, a_overwrite = false;
  augment->add_option("--checkpoint", a_ck, "Generator, checkpoint or run directory")->required();
  augment->add_option("--data", a_data, "Dataset root")->required();
  augment->add_option("--count", a_count, "Images to generate")->required()->check(CLI::NonNegativeNumber);
  augment->add_option("--out", a_out, "Output directory")->required();
  augment->add_option("--class", a_class, "crack|finger_interruption");
  augment->add_option("--seed", a_seed);
  augment->add_flag("--with-replacement", a_replace);
  augment->add_flag("--overwrite", a_overwrite);

  // evaluate-fid
  auto* efid = app.add_subcommand("evaluate-fid", "Frechet distance between two image folders");
  std::string f_real, f_fake, f_extractor = "inception_v3", f_out;
  bool f_dump = false;
  efid->add_option("--real", f_real)->required();
  efid->add_option("--fake", f_fake)->required();
  efid->add_option("--extractor", f_extractor, "inception_v3|mean_pixel|histogram");
  efid->add_option("--out", f_out, "Report directory");
  efid->add_flag("--dump-features", f_dump)->group("");

  // evaluate-seg
  auto* eseg = app.add_subcommand("evaluate-seg", "Score predicted masks against ground truth");
  std::string e_pred, e_gt, e_out;
  eseg->add_option("--pred", e_pred)->required();
  eseg->add_option("--gt", e_gt)->required();
  eseg->add_option("--out", e_out, "Report directory");

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::map<std::string, sigan_log_level> levels{{"debug", SIGAN_LOG_DEBUG},
                                                      {"info", SIGAN_LOG_INFO},
                                                      {"warn", SIGAN_LOG_WARN},
                                                      {"error", SIGAN_LOG_ERROR},
                                                      {"off", SIGAN_LOG_OFF}};
  sigan_set_log_level(c.ctx, levels.at(log_level));

  if (*train) {
    command = "train";
    if (!t_config.empty()) req["config"] = t_config;
    req["data"] = t_data;
    req["out"] = t_out;
    req["resume"] = t_resume;
    if (t_max_steps >= 0) req["max_steps"] = t_max_steps;
    req["overrides"] = overrides;
  } else if (*segment) {
    command = "segment";
    req = {{"checkpoint", s_ck}, {"input", s_input}, {"out", s_out}, {"otsu", s_otsu},
           {"polarity", s_polarity}, {"min_area", s_min_area}, {"original_size", s_original}};
    put(req, "threshold", s_threshold);
    if (!s_gt.empty()) req["gt"] = s_gt;
  } else if (*augment) {
    command = "augment";
    req = {{"checkpoint", a_ck}, {"data", a_data}, {"count", a_count}, {"out", a_out},
           {"seed", a_seed}, {"with_replacement", a_replace}, {"overwrite", a_overwrite}};
    if (!a_class.empty()) req["class"] = a_class;
  } else if (*efid) {
    command = "evaluate-fid";
    req = {{"real", f_real}, {"fake", f_fake}, {"extractor", f_extractor}, {"dump_features", f_dump}};
    if (!f_out.empty()) req["out"] = f_out;
  } else {
    command = "evaluate-seg";
    req = {{"pred", e_pred}, {"gt", e_gt}};
    if (!e_out.empty()) req["out"] = e_out;
  }

  char* result = nullptr;
  const sigan_status st = sigan_run(c.ctx, command.c_str(), req.dump().c_str(), &result);
  if (st != SIGAN_OK) return fail(sigan_status_name(st), sigan_last_error(c.ctx));
  std::cout << ordered_json::parse(result).dump(2) << '\n';
  sigan_string_free(result);
  return 0;
}
