// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// UNet generator with a non-local block on its last decoder feature, and the
// five-layer patch discriminator.
#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sigan/models/nonlocal.hpp"
#include "sigan/nn/layers.hpp"

namespace sigan::models {

/// G maps defect-free to defective images, F maps defective to defect-free.
enum class GeneratorRole { kG, kF };
enum class DiscriminatorRole { kDa, kDb };
enum class NormKind { kBatch, kInstance };

std::string_view role_name(GeneratorRole role);
std::string_view role_name(DiscriminatorRole role);
GeneratorRole parse_generator_role(std::string_view name);
DiscriminatorRole parse_discriminator_role(std::string_view name);
std::string_view norm_name(NormKind kind);
NormKind parse_norm(std::string_view name);

struct GeneratorArch {
  int in_channels = 1;
  int out_channels = 1;
  int image_size = 256;
  /// Encoder widths, outermost first; the decoder mirrors them.
  std::vector<int> widths{64, 128, 256, 512, 512, 512, 512, 512};
  NormKind norm = NormKind::kBatch;
  NonLocalConfig nonlocal;

  int depth() const { return static_cast<int>(widths.size()); }
  /// Throws ConfigError on non-positive widths/channels or a size that does
  /// not halve cleanly `depth()` times.
  void validate() const;
};

struct DiscLayerSpec {
  int filters = 0;
  int kernel = 4;
  int stride = 2;
  int padding = 1;
  bool norm = true;
  bool activation = true;
};

struct DiscriminatorArch {
  int in_channels = 1;
  std::vector<DiscLayerSpec> layers = default_layers();
  float leaky_slope = 0.2f;

  /// Conv+BN+LeakyReLU x4 (64/128/256/512 filters, strides 2,2,2,1) then a
  /// single-filter conv, all 4x4 kernels with padding 1.
  static std::vector<DiscLayerSpec> default_layers();
  bool is_default_layout() const;
  Shape output_shape(const Shape& in) const;
  void validate() const;
};

template <typename T>
class Generator {
 public:
  struct Tape {
    std::vector<Tensor<T>> down_in;
    std::vector<nn::NormCache<T>> down_norm;
    std::vector<Tensor<T>> down_out;
    std::vector<Tensor<T>> up_in;
    std::vector<Tensor<T>> up_act;
    std::vector<nn::NormCache<T>> up_norm;
    typename NonLocalBlock<T>::Cache nonlocal;
    Tensor<T> nonlocal_out;
    Tensor<T> output;
  };

  Generator(GeneratorRole role, GeneratorArch arch);

  GeneratorRole role() const { return role_; }
  const GeneratorArch& arch() const { return arch_; }

  /// Training forward: batch statistics, running estimates updated, tape recorded.
  Tensor<T> forward(const Tensor<T>& x, Tape* tape);
  /// Evaluation forward with running statistics. Pure in (params, x).
  Tensor<T> infer(const Tensor<T>& x) const;
  /// Returns dL/dx. Parameter grads accumulate when `accumulate` is set.
  Tensor<T> backward(Tape& tape, const Tensor<T>& dy, bool accumulate);

  /// All named arrays, trainable weights and normalization buffers alike.
  nn::ParamList<T> parameters();
  std::vector<const nn::Param<T>*> parameters() const;
  std::size_t weight_count() const;
  const NonLocalBlock<T>& nonlocal() const { return nonlocal_; }

 private:
  void check_input(const Shape& s) const;
  Tensor<T> normalize(int which, bool up, const Tensor<T>& x, nn::NormCache<T>* cache,
                      bool train);
  Tensor<T> normalize_eval(int which, bool up, const Tensor<T>& x) const;
  Tensor<T> normalize_backward(int which, bool up, const nn::NormCache<T>& cache,
                               const Tensor<T>& dy, bool accumulate);
  bool down_has_norm(int i) const { return i > 0 && i < arch_.depth() - 1; }

  GeneratorRole role_;
  GeneratorArch arch_;
  std::vector<nn::Conv2d<T>> down_;
  std::vector<nn::BatchNorm2d<T>> down_bn_;  // indexed by block, unused slots stay empty
  std::vector<nn::ConvTranspose2d<T>> up_;
  std::vector<nn::BatchNorm2d<T>> up_bn_;
  nn::InstanceNorm2d<T> instance_norm_;
  NonLocalBlock<T> nonlocal_;
};

template <typename T>
class Discriminator {
 public:
  struct Tape {
    std::vector<Tensor<T>> layer_in;
    std::vector<nn::NormCache<T>> norm;
    std::vector<Tensor<T>> pre_act;
  };

  Discriminator(DiscriminatorRole role, DiscriminatorArch arch);

  DiscriminatorRole role() const { return role_; }
  const DiscriminatorArch& arch() const { return arch_; }

  /// Patch logits, no final activation.
  Tensor<T> forward(const Tensor<T>& x, Tape* tape);
  Tensor<T> infer(const Tensor<T>& x) const;
  Tensor<T> backward(Tape& tape, const Tensor<T>& dy, bool accumulate);

  nn::ParamList<T> parameters();
  std::vector<const nn::Param<T>*> parameters() const;
  std::size_t weight_count() const;

 private:
  DiscriminatorRole role_;
  DiscriminatorArch arch_;
  std::vector<nn::Conv2d<T>> conv_;
  std::vector<nn::BatchNorm2d<T>> bn_;
};

/// Conv/deconv weights ~ N(0, 0.02); normalization scales ~ N(1, 0.02); biases zero.
template <typename T>
void init_weights(nn::ParamList<T> params, std::mt19937_64& rng);

template <typename T>
struct ModelSet {
  std::unique_ptr<Generator<T>> g;
  std::unique_ptr<Generator<T>> f;
  std::unique_ptr<Discriminator<T>> d_a;
  std::unique_ptr<Discriminator<T>> d_b;
};

/// Builds G, F, D_a, D_b and initializes them in that order from one seed.
template <typename T>
ModelSet<T> init_params(const GeneratorArch& gen_arch, const DiscriminatorArch& disc_arch,
                        std::uint64_t seed);

}  // namespace sigan::models
