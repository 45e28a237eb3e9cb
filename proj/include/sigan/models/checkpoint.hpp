// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// On-disk weight format: a directory with `metadata.json` (format version,
// kind, role, architecture, training step, config snapshot, tensor table) and
// one raw little-endian float32 file per named array.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigan/models/networks.hpp"

namespace sigan::models {

using Json = nlohmann::ordered_json;

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kMetadataFile = "metadata.json";

struct TensorDir {
  Json metadata;
  std::map<std::string, Tensor<float>> tensors;
};

using NamedTensors = std::vector<std::pair<std::string, const Tensor<float>*>>;

/// Writes `metadata` (plus a "tensors" table) and one .bin per tensor into `dir`.
void write_tensor_dir(const std::filesystem::path& dir, Json metadata, const NamedTensors& tensors);
TensorDir read_tensor_dir(const std::filesystem::path& dir);

void write_raw_f32(const std::filesystem::path& file, const Tensor<float>& t);
Tensor<float> read_raw_f32(const std::filesystem::path& file, const Shape& shape);

Json arch_to_json(const GeneratorArch& arch);
GeneratorArch generator_arch_from_json(const Json& j);
Json arch_to_json(const DiscriminatorArch& arch);
DiscriminatorArch discriminator_arch_from_json(const Json& j);

struct CheckpointInfo {
  std::int64_t training_step = 0;
  Json config = Json::object();
};

void save_generator(const Generator<float>& g, const std::filesystem::path& dir,
                    const CheckpointInfo& info = {});
std::unique_ptr<Generator<float>> load_generator(const std::filesystem::path& dir,
                                                 CheckpointInfo* info = nullptr);
void save_discriminator(const Discriminator<float>& d, const std::filesystem::path& dir,
                        const CheckpointInfo& info = {});
std::unique_ptr<Discriminator<float>> load_discriminator(const std::filesystem::path& dir,
                                                         CheckpointInfo* info = nullptr);

/// Copies named arrays into `params`; names and shapes must match exactly.
void assign_params(nn::ParamList<float> params, const std::map<std::string, Tensor<float>>& src,
                   const std::string& context);

/// Finds the generator directory for `role` under a generator directory, a
/// training checkpoint (G/ and F/ subdirectories), or a training run
/// directory (checkpoints/latest).
std::filesystem::path resolve_generator_dir(const std::filesystem::path& path, GeneratorRole role);

}  // namespace sigan::models
