// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/train/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

namespace sigan::train {

std::string_view update_order_name(UpdateOrder order) {
  return order == UpdateOrder::kGeneratorsFirst ? "generators_first" : "discriminators_first";
}

UpdateOrder parse_update_order(std::string_view name) {
  if (name == "generators_first") return UpdateOrder::kGeneratorsFirst;
  if (name == "discriminators_first") return UpdateOrder::kDiscriminatorsFirst;
  throw ConfigError("unknown update order '" + std::string(name) +
                    "' (generators_first|discriminators_first)");
}

models::GeneratorArch TrainConfig::generator_arch() const {
  models::GeneratorArch arch;
  arch.in_channels = channels;
  arch.out_channels = channels;
  arch.image_size = image_size;
  arch.widths = generator_widths;
  arch.norm = norm;
  arch.nonlocal.enabled = nonlocal;
  arch.nonlocal.max_positions = nonlocal_max_positions;
  arch.nonlocal.projection = nonlocal_projection;
  return arch;
}

models::DiscriminatorArch TrainConfig::discriminator_arch() const {
  models::DiscriminatorArch arch;
  arch.in_channels = channels;
  return arch;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(base_lr > 0)) fail("base_lr must be > 0");
  if (epochs_constant < 0 || epochs_decay < 0) fail("epoch counts must be >= 0");
  if (total_epochs() < 1) fail("epochs_constant + epochs_decay must be >= 1");
  loss_weights.validate();
  if (!(optimizer.beta1 >= 0 && optimizer.beta1 < 1)) fail("beta1 must lie in [0, 1)");
  if (!(optimizer.beta2 >= 0 && optimizer.beta2 < 1)) fail("beta2 must lie in [0, 1)");
  if (!(optimizer.epsilon > 0)) fail("epsilon must be > 0");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
  if (channels != 1 && channels != 3) fail("channels must be 1 or 3");
  if (pool_size < 0) fail("pool_size must be >= 0");
  if (nonlocal_max_positions < 1) fail("nonlocal_max_positions must be >= 1");
  if (!(grad_clip >= 0)) fail("grad_clip must be >= 0");
  if (defect_class == data::DefectClass::kDefectFree) {
    fail("defect_class must name a defect (crack|finger_interruption)");
  }
  generator_arch().validate();
  const auto d = discriminator_arch();
  d.validate();
  d.output_shape({1, channels, image_size, image_size});
}

namespace {

template <typename N>
N parse_number(const std::string& key, const std::string& value) {
  N out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    out.push_back(parse_number<int>(key, item));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

using Setter = std::function<void(TrainConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const TrainConfig&)>;

struct KeySpec {
  std::string key;
  Setter set;
  Getter get;
};

std::string num(double v) { return fmt::format("{}", v); }

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"batch_size", [](TrainConfig& c, auto& k, auto& v) { c.batch_size = parse_number<int>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.batch_size); }},
      {"base_lr", [](TrainConfig& c, auto& k, auto& v) { c.base_lr = parse_number<double>(k, v); },
       [](const TrainConfig& c) { return num(c.base_lr); }},
      {"epochs_constant",
       [](TrainConfig& c, auto& k, auto& v) { c.epochs_constant = parse_number<int>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.epochs_constant); }},
      {"epochs_decay",
       [](TrainConfig& c, auto& k, auto& v) { c.epochs_decay = parse_number<int>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.epochs_decay); }},
      {"lambda1",
       [](TrainConfig& c, auto& k, auto& v) { c.loss_weights.lambda1 = parse_number<double>(k, v); },
       [](const TrainConfig& c) { return num(c.loss_weights.lambda1); }},
      {"lambda2",
       [](TrainConfig& c, auto& k, auto& v) { c.loss_weights.lambda2 = parse_number<double>(k, v); },
       [](const TrainConfig& c) { return num(c.loss_weights.lambda2); }},
      {"beta1", [](TrainConfig& c, auto& k, auto& v) { c.optimizer.beta1 = parse_number<double>(k, v); },
       [](const TrainConfig& c) { return num(c.optimizer.beta1); }},
      {"beta2", [](TrainConfig& c, auto& k, auto& v) { c.optimizer.beta2 = parse_number<double>(k, v); },
       [](const TrainConfig& c) { return num(c.optimizer.beta2); }},
      {"epsilon",
       [](TrainConfig& c, auto& k, auto& v) { c.optimizer.epsilon = parse_number<double>(k, v); },
       [](const TrainConfig& c) { return num(c.optimizer.epsilon); }},
      {"seed", [](TrainConfig& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      {"image_size", [](TrainConfig& c, auto& k, auto& v) { c.image_size = parse_number<int>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.image_size); }},
      {"checkpoint_every",
       [](TrainConfig& c, auto& k, auto& v) { c.checkpoint_every = parse_number<int>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.checkpoint_every); }},
      {"channels", [](TrainConfig& c, auto& k, auto& v) { c.channels = parse_number<int>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.channels); }},
      {"generator_widths",
       [](TrainConfig& c, auto& k, auto& v) { c.generator_widths = parse_int_list(k, v); },
       [](const TrainConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.generator_widths.size(); ++i) {
           if (i) out += ",";
           out += std::to_string(c.generator_widths[i]);
         }
         return out;
       }},
      {"norm", [](TrainConfig& c, auto&, auto& v) { c.norm = models::parse_norm(v); },
       [](const TrainConfig& c) { return std::string(models::norm_name(c.norm)); }},
      {"nonlocal", [](TrainConfig& c, auto& k, auto& v) { c.nonlocal = parse_bool(k, v); },
       [](const TrainConfig& c) { return std::string(c.nonlocal ? "true" : "false"); }},
      {"nonlocal_max_positions",
       [](TrainConfig& c, auto& k, auto& v) { c.nonlocal_max_positions = parse_number<int>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.nonlocal_max_positions); }},
      {"nonlocal_projection",
       [](TrainConfig& c, auto& k, auto& v) { c.nonlocal_projection = parse_bool(k, v); },
       [](const TrainConfig& c) { return std::string(c.nonlocal_projection ? "true" : "false"); }},
      {"adversarial_mode",
       [](TrainConfig& c, auto&, auto& v) { c.adversarial_mode = losses::parse_adversarial_mode(v); },
       [](const TrainConfig& c) { return std::string(losses::adversarial_mode_name(c.adversarial_mode)); }},
      {"l1_reduction",
       [](TrainConfig& c, auto&, auto& v) { c.l1_reduction = losses::parse_reduction(v); },
       [](const TrainConfig& c) { return std::string(losses::reduction_name(c.l1_reduction)); }},
      {"update_order", [](TrainConfig& c, auto&, auto& v) { c.update_order = parse_update_order(v); },
       [](const TrainConfig& c) { return std::string(update_order_name(c.update_order)); }},
      {"pool_size", [](TrainConfig& c, auto& k, auto& v) { c.pool_size = parse_number<int>(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.pool_size); }},
      {"grad_clip", [](TrainConfig& c, auto& k, auto& v) { c.grad_clip = parse_number<double>(k, v); },
       [](const TrainConfig& c) { return num(c.grad_clip); }},
      {"defect_class", [](TrainConfig& c, auto&, auto& v) { c.defect_class = data::parse_class(v); },
       [](const TrainConfig& c) { return std::string(data::class_name(c.defect_class)); }},
      {"offline_augment",
       [](TrainConfig& c, auto& k, auto& v) { c.offline_augment = parse_bool(k, v); },
       [](const TrainConfig& c) { return std::string(c.offline_augment ? "true" : "false"); }},
  };
  return specs;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& s : key_specs()) out.push_back(s.key);
    return out;
  }();
  return keys;
}

ConfigMap parse_config_text(std::string_view text, const std::string& origin) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (out.contains(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), file.string());
}

void apply_config(TrainConfig& cfg, const ConfigMap& entries, const std::string& origin) {
  for (const auto& [key, value] : entries) {
    const auto& specs = key_specs();
    auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& s) { return s.key == key; });
    if (it == specs.end()) throw ConfigError(origin + ": unknown config key '" + key + "'");
    try {
      it->set(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  }
}

TrainConfig resolve_config(const ConfigMap& file_entries, const ConfigMap& cli_entries) {
  TrainConfig cfg;
  apply_config(cfg, file_entries, "config file");
  apply_config(cfg, cli_entries, "command line");
  cfg.validate();
  return cfg;
}

ConfigMap to_config_map(const TrainConfig& cfg) {
  ConfigMap out;
  for (const auto& s : key_specs()) out[s.key] = s.get(cfg);
  return out;
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& s : key_specs()) {
    const std::string v = s.get(*this);
    if (s.key == "generator_widths") {
      j[s.key] = generator_widths;
    } else if (v == "true" || v == "false") {
      j[s.key] = v == "true";
    } else if (s.key == "seed") {
      j[s.key] = seed;
    } else {
      double d = 0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
      if (ec == std::errc() && ptr == v.data() + v.size()) {
        if (v.find_first_of(".eE") == std::string::npos) {
          j[s.key] = std::stoll(v);
        } else {
          j[s.key] = d;
        }
      } else {
        j[s.key] = v;
      }
    }
  }
  return j;
}

TrainConfig config_from_json(const nlohmann::ordered_json& j) {
  ConfigMap entries;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      entries[key] = value.get<std::string>();
    } else if (value.is_boolean()) {
      entries[key] = value.get<bool>() ? "true" : "false";
    } else if (value.is_array()) {
      std::string s;
      for (const auto& v : value) s += (s.empty() ? "" : ",") + std::to_string(v.get<int>());
      entries[key] = s;
    } else if (value.is_number_unsigned() || value.is_number_integer()) {
      entries[key] = value.dump();
    } else {
      entries[key] = num(value.get<double>());
    }
  }
  TrainConfig cfg;
  apply_config(cfg, entries, "config snapshot");
  return cfg;
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  const int total = cfg.total_epochs();
  if (epoch < 0 || epoch > total) {
    throw ConfigError("lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                      std::to_string(total) + "]");
  }
  if (epoch < cfg.epochs_constant) return cfg.base_lr;
  if (cfg.epochs_decay == 0) return 0.0;
  const double ratio = static_cast<double>(total - epoch) / cfg.epochs_decay;
  return cfg.base_lr * ratio;
}

}  // namespace sigan::train
