// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/models/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace fs = std::filesystem;

namespace sigan::models {

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

Json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + file.string() + ": " + e.what());
  }
}

std::string file_name_for(const std::string& tensor_name) {
  std::string out = tensor_name;
  std::replace(out.begin(), out.end(), '/', '_');
  return out + ".bin";
}

NamedTensors named(const std::vector<const nn::Param<float>*>& params) {
  NamedTensors out;
  for (const auto* p : params) out.emplace_back(p->name, &p->value);
  return out;
}

void check_header(const Json& meta, const fs::path& dir, const char* kind) {
  if (meta.value("format_version", 0) != kCheckpointFormatVersion) {
    throw IoError("checkpoint " + dir.string() + ": unsupported format version " +
                  meta.value("format_version", Json(0)).dump());
  }
  if (meta.value("kind", std::string()) != kind) {
    throw IoError("checkpoint " + dir.string() + " holds a '" +
                  meta.value("kind", std::string("?")) + "', expected a " + kind);
  }
}

}  // namespace

void write_raw_f32(const fs::path& file, const Tensor<float>& t) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
  } else {
    for (float v : t.vec()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      bits = byteswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
  if (!out) throw IoError("short write to " + file.string());
}

Tensor<float> read_raw_f32(const fs::path& file, const Shape& shape) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  const auto expected = shape.numel() * sizeof(float);
  std::error_code ec;
  const auto actual = fs::file_size(file, ec);
  if (ec || actual != expected) {
    throw IoError(file.string() + ": expected " + std::to_string(expected) + " bytes for shape " +
                  shape.str() + ", found " + std::to_string(actual));
  }
  Tensor<float> t(shape);
  in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(expected));
  if constexpr (std::endian::native != std::endian::little) {
    for (float& v : t.vec()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      bits = byteswap32(bits);
      std::memcpy(&v, &bits, 4);
    }
  }
  return t;
}

void write_tensor_dir(const fs::path& dir, Json metadata, const NamedTensors& tensors) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  Json table = Json::array();
  for (const auto& [name, tensor] : tensors) {
    const std::string file = file_name_for(name);
    write_raw_f32(dir / file, *tensor);
    const Shape& s = tensor->shape();
    table.push_back({{"name", name}, {"file", file}, {"shape", {s.n, s.c, s.h, s.w}}});
  }
  metadata["dtype"] = "float32";
  metadata["byte_order"] = "little";
  metadata["tensors"] = std::move(table);
  std::ofstream out(dir / kMetadataFile, std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / kMetadataFile).string());
  out << metadata.dump(2) << '\n';
}

TensorDir read_tensor_dir(const fs::path& dir) {
  TensorDir out;
  out.metadata = read_json(dir / kMetadataFile);
  if (!out.metadata.contains("tensors")) {
    throw IoError("checkpoint " + dir.string() + ": metadata has no tensor table");
  }
  for (const auto& entry : out.metadata["tensors"]) {
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape.size() != 4) throw IoError("checkpoint " + dir.string() + ": bad tensor shape");
    out.tensors.emplace(entry.at("name").get<std::string>(),
                        read_raw_f32(dir / entry.at("file").get<std::string>(),
                                     {shape[0], shape[1], shape[2], shape[3]}));
  }
  return out;
}

Json arch_to_json(const GeneratorArch& arch) {
  return Json{{"in_channels", arch.in_channels},
              {"out_channels", arch.out_channels},
              {"image_size", arch.image_size},
              {"widths", arch.widths},
              {"norm", norm_name(arch.norm)},
              {"nonlocal",
               {{"enabled", arch.nonlocal.enabled},
                {"max_positions", arch.nonlocal.max_positions},
                {"projection", arch.nonlocal.projection}}}};
}

GeneratorArch generator_arch_from_json(const Json& j) {
  GeneratorArch arch;
  arch.in_channels = j.at("in_channels").get<int>();
  arch.out_channels = j.at("out_channels").get<int>();
  arch.image_size = j.at("image_size").get<int>();
  arch.widths = j.at("widths").get<std::vector<int>>();
  arch.norm = parse_norm(j.at("norm").get<std::string>());
  const auto& nl = j.at("nonlocal");
  arch.nonlocal.enabled = nl.at("enabled").get<bool>();
  arch.nonlocal.max_positions = nl.at("max_positions").get<int>();
  arch.nonlocal.projection = nl.at("projection").get<bool>();
  return arch;
}

Json arch_to_json(const DiscriminatorArch& arch) {
  Json layers = Json::array();
  for (const auto& l : arch.layers) {
    layers.push_back({{"filters", l.filters},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"padding", l.padding},
                      {"norm", l.norm},
                      {"activation", l.activation}});
  }
  return Json{{"in_channels", arch.in_channels},
              {"leaky_slope", arch.leaky_slope},
              {"layers", std::move(layers)}};
}

DiscriminatorArch discriminator_arch_from_json(const Json& j) {
  DiscriminatorArch arch;
  arch.in_channels = j.at("in_channels").get<int>();
  arch.leaky_slope = j.at("leaky_slope").get<float>();
  arch.layers.clear();
  for (const auto& l : j.at("layers")) {
    arch.layers.push_back({l.at("filters").get<int>(), l.at("kernel").get<int>(),
                           l.at("stride").get<int>(), l.at("padding").get<int>(),
                           l.at("norm").get<bool>(), l.at("activation").get<bool>()});
  }
  return arch;
}

void assign_params(nn::ParamList<float> params, const std::map<std::string, Tensor<float>>& src,
                   const std::string& context) {
  if (params.size() != src.size()) {
    throw IoError(context + ": checkpoint holds " + std::to_string(src.size()) +
                  " arrays, architecture expects " + std::to_string(params.size()));
  }
  for (auto* p : params) {
    auto it = src.find(p->name);
    if (it == src.end()) throw IoError(context + ": missing array '" + p->name + "'");
    if (it->second.shape() != p->value.shape()) {
      throw IoError(context + ": array '" + p->name + "' has shape " + it->second.shape().str() +
                    ", architecture expects " + p->value.shape().str());
    }
    p->value = it->second;
  }
}

void save_generator(const Generator<float>& g, const fs::path& dir, const CheckpointInfo& info) {
  Json meta{{"format_version", kCheckpointFormatVersion},
            {"kind", "generator"},
            {"role", role_name(g.role())},
            {"arch", arch_to_json(g.arch())},
            {"training_step", info.training_step},
            {"config", info.config}};
  write_tensor_dir(dir, std::move(meta), named(g.parameters()));
}

std::unique_ptr<Generator<float>> load_generator(const fs::path& dir, CheckpointInfo* info) {
  TensorDir td = read_tensor_dir(dir);
  check_header(td.metadata, dir, "generator");
  auto g = std::make_unique<Generator<float>>(
      parse_generator_role(td.metadata.at("role").get<std::string>()),
      generator_arch_from_json(td.metadata.at("arch")));
  assign_params(g->parameters(), td.tensors, "checkpoint " + dir.string());
  if (info) {
    info->training_step = td.metadata.value("training_step", std::int64_t{0});
    info->config = td.metadata.value("config", Json::object());
  }
  return g;
}

void save_discriminator(const Discriminator<float>& d, const fs::path& dir,
                        const CheckpointInfo& info) {
  Json meta{{"format_version", kCheckpointFormatVersion},
            {"kind", "discriminator"},
            {"role", role_name(d.role())},
            {"arch", arch_to_json(d.arch())},
            {"training_step", info.training_step},
            {"config", info.config}};
  write_tensor_dir(dir, std::move(meta), named(d.parameters()));
}

std::unique_ptr<Discriminator<float>> load_discriminator(const fs::path& dir,
                                                         CheckpointInfo* info) {
  TensorDir td = read_tensor_dir(dir);
  check_header(td.metadata, dir, "discriminator");
  auto d = std::make_unique<Discriminator<float>>(
      parse_discriminator_role(td.metadata.at("role").get<std::string>()),
      discriminator_arch_from_json(td.metadata.at("arch")));
  assign_params(d->parameters(), td.tensors, "checkpoint " + dir.string());
  if (info) {
    info->training_step = td.metadata.value("training_step", std::int64_t{0});
    info->config = td.metadata.value("config", Json::object());
  }
  return d;
}

fs::path resolve_generator_dir(const fs::path& path, GeneratorRole role) {
  if (fs::exists(path / kMetadataFile)) return path;
  const fs::path sub = path / (role == GeneratorRole::kG ? "G" : "F");
  if (fs::exists(sub / kMetadataFile)) return sub;
  const fs::path latest = path / "checkpoints" / "latest";
  if (fs::exists(latest)) {
    std::ifstream in(latest);
    std::string name;
    std::getline(in, name);
    return resolve_generator_dir(path / "checkpoints" / name, role);
  }
  throw IoError("no generator checkpoint found at " + path.string());
}

}  // namespace sigan::models
