// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigan/data/dataset.hpp"
#include "sigan/losses.hpp"
#include "sigan/models/networks.hpp"
#include "sigan/nn/adam.hpp"

namespace sigan::train {

enum class UpdateOrder { kGeneratorsFirst, kDiscriminatorsFirst };

std::string_view update_order_name(UpdateOrder order);
UpdateOrder parse_update_order(std::string_view name);

struct TrainConfig {
  int batch_size = 4;
  double base_lr = 2e-4;
  int epochs_constant = 30;
  int epochs_decay = 30;
  losses::LossWeights loss_weights;
  nn::AdamConfig optimizer;
  std::uint64_t seed = 0;
  int image_size = data::kDefaultImageSize;
  /// Epochs between checkpoints; 0 writes only the final one.
  int checkpoint_every = 10;

  int channels = 1;
  std::vector<int> generator_widths{64, 128, 256, 512, 512, 512, 512, 512};
  models::NormKind norm = models::NormKind::kBatch;
  bool nonlocal = true;
  int nonlocal_max_positions = models::kDefaultAttentionBudget;
  bool nonlocal_projection = false;
  losses::AdversarialMode adversarial_mode = losses::AdversarialMode::kLog;
  losses::Reduction l1_reduction = losses::Reduction::kMean;
  UpdateOrder update_order = UpdateOrder::kGeneratorsFirst;
  /// History of generated images shown to the discriminators; 0 disables it.
  int pool_size = 0;
  /// Max joint gradient norm per optimizer; 0 disables clipping.
  double grad_clip = 0.0;

  data::DefectClass defect_class = data::DefectClass::kCrack;
  bool offline_augment = true;

  int total_epochs() const { return epochs_constant + epochs_decay; }
  models::GeneratorArch generator_arch() const;
  models::DiscriminatorArch discriminator_arch() const;
  void validate() const;

  nlohmann::ordered_json to_json() const;
};

using ConfigMap = std::map<std::string, std::string>;

/// Every key accepted in config files and as command-line overrides.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
ConfigMap parse_config_text(std::string_view text, const std::string& origin = "<config>");
ConfigMap read_config_file(const std::filesystem::path& file);

/// Applies `entries` on top of `cfg`. Unknown keys and bad values throw ConfigError.
void apply_config(TrainConfig& cfg, const ConfigMap& entries, const std::string& origin);

/// Defaults, then file entries, then command-line entries; validated.
TrainConfig resolve_config(const ConfigMap& file_entries, const ConfigMap& cli_entries);

/// Renders `cfg` back into the flat form (parses to an equal config).
ConfigMap to_config_map(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::ordered_json& j);

/// base_lr before epochs_constant, then a linear ramp reaching 0 at the last epoch.
double lr_schedule(int epoch, const TrainConfig& cfg);

}  // namespace sigan::train
