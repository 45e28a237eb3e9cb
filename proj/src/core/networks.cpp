// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/models/networks.hpp"

#include <cmath>

namespace sigan::models {

namespace {

constexpr float kEncoderSlope = 0.2f;
const nn::ConvGeometry kDown{4, 4, 2, 2, 1, 1};

}  // namespace

std::string_view role_name(GeneratorRole role) {
  return role == GeneratorRole::kG ? "G_defectfree_to_defect" : "F_defect_to_defectfree";
}

std::string_view role_name(DiscriminatorRole role) {
  return role == DiscriminatorRole::kDa ? "D_a" : "D_b";
}

GeneratorRole parse_generator_role(std::string_view name) {
  if (name == "G" || name == "G_defectfree_to_defect") return GeneratorRole::kG;
  if (name == "F" || name == "F_defect_to_defectfree") return GeneratorRole::kF;
  throw RoleError("unknown generator role '" + std::string(name) + "'");
}

DiscriminatorRole parse_discriminator_role(std::string_view name) {
  if (name == "D_a") return DiscriminatorRole::kDa;
  if (name == "D_b") return DiscriminatorRole::kDb;
  throw RoleError("unknown discriminator role '" + std::string(name) + "'");
}

std::string_view norm_name(NormKind kind) {
  return kind == NormKind::kBatch ? "batch" : "instance";
}

NormKind parse_norm(std::string_view name) {
  if (name == "batch") return NormKind::kBatch;
  if (name == "instance") return NormKind::kInstance;
  throw ConfigError("unknown normalization '" + std::string(name) + "' (batch|instance)");
}

void GeneratorArch::validate() const {
  if (in_channels <= 0 || out_channels <= 0) {
    throw ConfigError("generator channel counts must be positive");
  }
  if (widths.empty()) throw ConfigError("generator needs at least one encoder block");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] <= 0) {
      throw ConfigError("generator width[" + std::to_string(i) + "] = " +
                        std::to_string(widths[i]) + " must be positive");
    }
  }
  if (image_size <= 0 || image_size % (1 << depth()) != 0) {
    throw ConfigError("image size " + std::to_string(image_size) +
                      " must be a positive multiple of 2^" + std::to_string(depth()));
  }
}

std::vector<DiscLayerSpec> DiscriminatorArch::default_layers() {
  return {{64, 4, 2, 1, true, true},
          {128, 4, 2, 1, true, true},
          {256, 4, 2, 1, true, true},
          {512, 4, 1, 1, true, true},
          {1, 4, 1, 1, false, false}};
}

bool DiscriminatorArch::is_default_layout() const {
  const auto ref = default_layers();
  if (layers.size() != ref.size()) return false;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = ref[i];
    if (a.filters != b.filters || a.kernel != b.kernel || a.stride != b.stride ||
        a.padding != b.padding || a.norm != b.norm || a.activation != b.activation) {
      return false;
    }
  }
  return true;
}

Shape DiscriminatorArch::output_shape(const Shape& in) const {
  Shape s = in;
  for (const auto& l : layers) {
    s.c = l.filters;
    s.h = (s.h + 2 * l.padding - l.kernel) / l.stride + 1;
    s.w = (s.w + 2 * l.padding - l.kernel) / l.stride + 1;
  }
  return s;
}

void DiscriminatorArch::validate() const {
  if (in_channels <= 0) throw ConfigError("discriminator input channels must be positive");
  if (layers.empty()) throw ConfigError("discriminator needs at least one layer");
  for (const auto& l : layers) {
    if (l.filters <= 0 || l.kernel <= 0 || l.stride <= 0 || l.padding < 0) {
      throw ConfigError("invalid discriminator layer spec");
    }
  }
}

// ---------------------------------------------------------------------------
// Generator

template <typename T>
Generator<T>::Generator(GeneratorRole role, GeneratorArch arch)
    : role_(role), arch_(std::move(arch)) {
  arch_.validate();
  const int depth = arch_.depth();
  const auto& w = arch_.widths;
  const bool instance = arch_.norm == NormKind::kInstance;
  down_bn_.resize(depth);
  up_bn_.resize(depth);
  for (int i = 0; i < depth; ++i) {
    const int in = i == 0 ? arch_.in_channels : w[i - 1];
    const std::string name = "down" + std::to_string(i);
    down_.emplace_back(name + ".conv", in, w[i], kDown, !down_has_norm(i) || instance);
    if (down_has_norm(i) && !instance) down_bn_[i] = nn::BatchNorm2d<T>(name + ".norm", w[i]);
  }
  for (int i = 0; i < depth; ++i) {
    const int in = i == depth - 1 ? w[depth - 1] : 2 * w[i];
    const int out = i == 0 ? arch_.out_channels : w[i - 1];
    const std::string name = "up" + std::to_string(i);
    up_.emplace_back(name + ".deconv", in, out, kDown, i == 0 || instance);
    if (i > 0 && !instance) up_bn_[i] = nn::BatchNorm2d<T>(name + ".norm", out);
  }
  if (arch_.nonlocal.enabled) {
    const int channels = depth == 1 ? w[0] : 2 * w[0];
    const int side = arch_.image_size / 2;
    nonlocal_ = NonLocalBlock<T>("nonlocal", channels, side, side, arch_.nonlocal);
  }
}

template <typename T>
void Generator<T>::check_input(const Shape& s) const {
  if (s.c != arch_.in_channels || s.h != arch_.image_size || s.w != arch_.image_size) {
    throw ShapeError("generator " + std::string(role_name(role_)) + ": expected input Bx" +
                     std::to_string(arch_.in_channels) + "x" + std::to_string(arch_.image_size) +
                     "x" + std::to_string(arch_.image_size) + ", got " + s.str());
  }
  if (s.n <= 0) throw ShapeError("generator: empty batch");
}

template <typename T>
Tensor<T> Generator<T>::normalize(int which, bool up, const Tensor<T>& x,
                                  nn::NormCache<T>* cache, bool train) {
  if (arch_.norm == NormKind::kInstance) return instance_norm_.forward(x, cache);
  auto& bn = up ? up_bn_[which] : down_bn_[which];
  return bn.forward(x, train ? nn::Mode::kTrain : nn::Mode::kEval, cache);
}

template <typename T>
Tensor<T> Generator<T>::normalize_eval(int which, bool up, const Tensor<T>& x) const {
  if (arch_.norm == NormKind::kInstance) return instance_norm_.forward(x, nullptr);
  return (up ? up_bn_[which] : down_bn_[which]).infer(x);
}

template <typename T>
Tensor<T> Generator<T>::normalize_backward(int which, bool up, const nn::NormCache<T>& cache,
                                           const Tensor<T>& dy, bool accumulate) {
  if (arch_.norm == NormKind::kInstance) return instance_norm_.backward(cache, dy);
  return (up ? up_bn_[which] : down_bn_[which]).backward(cache, dy, accumulate);
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& x, Tape* tape) {
  check_input(x.shape());
  Tape local;
  Tape& t = tape ? *tape : local;
  const int depth = arch_.depth();
  t.down_in.assign(depth, {});
  t.down_norm.assign(depth, {});
  t.down_out.assign(depth, {});
  t.up_in.assign(depth, {});
  t.up_act.assign(depth, {});
  t.up_norm.assign(depth, {});

  for (int i = 0; i < depth; ++i) {
    t.down_in[i] = i == 0 ? x : nn::leaky_relu(t.down_out[i - 1], T(kEncoderSlope));
    Tensor<T> h = down_[i].forward(t.down_in[i]);
    if (down_has_norm(i)) h = normalize(i, false, h, &t.down_norm[i], true);
    t.down_out[i] = std::move(h);
  }
  Tensor<T> u;
  for (int i = depth - 1; i >= 0; --i) {
    t.up_in[i] = i == depth - 1 ? t.down_out[i] : concat_channels(t.down_out[i], u);
    const Tensor<T>* in = &t.up_in[i];
    if (i == 0 && arch_.nonlocal.enabled) {
      t.nonlocal_out = nonlocal_.forward(t.up_in[0], &t.nonlocal);
      in = &t.nonlocal_out;
    }
    t.up_act[i] = nn::leaky_relu(*in, T(0));
    Tensor<T> h = up_[i].forward(t.up_act[i]);
    if (i > 0) {
      u = normalize(i, true, h, &t.up_norm[i], true);
    } else {
      t.output = nn::tanh_forward(h);
    }
  }
  return t.output;
}

template <typename T>
Tensor<T> Generator<T>::infer(const Tensor<T>& x) const {
  check_input(x.shape());
  const int depth = arch_.depth();
  std::vector<Tensor<T>> down_out(depth);
  for (int i = 0; i < depth; ++i) {
    Tensor<T> h = down_[i].forward(i == 0 ? x : nn::leaky_relu(down_out[i - 1], T(kEncoderSlope)));
    if (down_has_norm(i)) h = normalize_eval(i, false, h);
    down_out[i] = std::move(h);
  }
  Tensor<T> u;
  for (int i = depth - 1; i >= 0; --i) {
    Tensor<T> in = i == depth - 1 ? down_out[i] : concat_channels(down_out[i], u);
    if (i == 0 && arch_.nonlocal.enabled) in = nonlocal_.forward(in, nullptr);
    Tensor<T> h = up_[i].forward(nn::leaky_relu(in, T(0)));
    if (i > 0) {
      u = normalize_eval(i, true, h);
    } else {
      return nn::tanh_forward(h);
    }
  }
  return {};
}

template <typename T>
Tensor<T> Generator<T>::backward(Tape& t, const Tensor<T>& dy, bool accumulate) {
  const int depth = arch_.depth();
  std::vector<Tensor<T>> d_down(depth);
  for (int i = 0; i < depth; ++i) d_down[i] = Tensor<T>(t.down_out[i].shape());

  Tensor<T> g = nn::tanh_backward(t.output, dy);
  for (int i = 0; i < depth; ++i) {
    if (i > 0) g = normalize_backward(i, true, t.up_norm[i], g, accumulate);
    g = up_[i].backward(t.up_act[i], g, accumulate);
    const bool nl = i == 0 && arch_.nonlocal.enabled;
    g = nn::leaky_relu_backward(nl ? t.nonlocal_out : t.up_in[i], g, T(0));
    if (nl) g = nonlocal_.backward(t.nonlocal, g, accumulate);
    if (i == depth - 1) {
      add_inplace(d_down[i], g);
    } else {
      auto [skip, rest] = split_channels(g, t.down_out[i].shape().c);
      add_inplace(d_down[i], skip);
      g = std::move(rest);
    }
  }
  Tensor<T> dx;
  for (int i = depth - 1; i >= 0; --i) {
    Tensor<T> h = std::move(d_down[i]);
    if (down_has_norm(i)) h = normalize_backward(i, false, t.down_norm[i], h, accumulate);
    h = down_[i].backward(t.down_in[i], h, accumulate);
    if (i > 0) {
      add_inplace(d_down[i - 1], nn::leaky_relu_backward(t.down_out[i - 1], h, T(kEncoderSlope)));
    } else {
      dx = std::move(h);
    }
  }
  return dx;
}

template <typename T>
nn::ParamList<T> Generator<T>::parameters() {
  nn::ParamList<T> out;
  const int depth = arch_.depth();
  const bool batch = arch_.norm == NormKind::kBatch;
  for (int i = 0; i < depth; ++i) {
    down_[i].collect(out);
    if (down_has_norm(i) && batch) down_bn_[i].collect(out);
  }
  if (arch_.nonlocal.enabled) nonlocal_.collect(out);
  for (int i = depth - 1; i >= 0; --i) {
    up_[i].collect(out);
    if (i > 0 && batch) up_bn_[i].collect(out);
  }
  return out;
}

template <typename T>
std::vector<const nn::Param<T>*> Generator<T>::parameters() const {
  auto params = const_cast<Generator*>(this)->parameters();
  return {params.begin(), params.end()};
}

template <typename T>
std::size_t Generator<T>::weight_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) {
    if (p->trainable) total += p->value.size();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Discriminator

template <typename T>
Discriminator<T>::Discriminator(DiscriminatorRole role, DiscriminatorArch arch)
    : role_(role), arch_(std::move(arch)) {
  arch_.validate();
  int in = arch_.in_channels;
  bn_.resize(arch_.layers.size());
  for (std::size_t l = 0; l < arch_.layers.size(); ++l) {
    const auto& spec = arch_.layers[l];
    const std::string name = "layer" + std::to_string(l);
    conv_.emplace_back(name + ".conv", in, spec.filters,
                       nn::ConvGeometry{spec.kernel, spec.kernel, spec.stride, spec.stride,
                                        spec.padding, spec.padding},
                       !spec.norm);
    if (spec.norm) bn_[l] = nn::BatchNorm2d<T>(name + ".norm", spec.filters);
    in = spec.filters;
  }
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& x, Tape* tape) {
  if (!x.all_finite()) {
    throw NumericError("discriminator " + std::string(role_name(role_)) + ": non-finite input");
  }
  Tape local;
  Tape& t = tape ? *tape : local;
  const std::size_t count = arch_.layers.size();
  t.layer_in.assign(count, {});
  t.norm.assign(count, {});
  t.pre_act.assign(count, {});
  Tensor<T> h = x;
  for (std::size_t l = 0; l < count; ++l) {
    const auto& spec = arch_.layers[l];
    t.layer_in[l] = std::move(h);
    h = conv_[l].forward(t.layer_in[l]);
    if (spec.norm) h = bn_[l].forward(h, nn::Mode::kTrain, &t.norm[l]);
    if (spec.activation) {
      t.pre_act[l] = std::move(h);
      h = nn::leaky_relu(t.pre_act[l], T(arch_.leaky_slope));
    }
  }
  return h;
}

template <typename T>
Tensor<T> Discriminator<T>::infer(const Tensor<T>& x) const {
  if (!x.all_finite()) {
    throw NumericError("discriminator " + std::string(role_name(role_)) + ": non-finite input");
  }
  Tensor<T> h = x;
  for (std::size_t l = 0; l < arch_.layers.size(); ++l) {
    const auto& spec = arch_.layers[l];
    h = conv_[l].forward(h);
    if (spec.norm) h = bn_[l].infer(h);
    if (spec.activation) h = nn::leaky_relu(h, T(arch_.leaky_slope));
  }
  return h;
}

template <typename T>
Tensor<T> Discriminator<T>::backward(Tape& t, const Tensor<T>& dy, bool accumulate) {
  Tensor<T> g = dy;
  for (std::size_t l = arch_.layers.size(); l-- > 0;) {
    const auto& spec = arch_.layers[l];
    if (spec.activation) g = nn::leaky_relu_backward(t.pre_act[l], g, T(arch_.leaky_slope));
    if (spec.norm) g = bn_[l].backward(t.norm[l], g, accumulate);
    g = conv_[l].backward(t.layer_in[l], g, accumulate);
  }
  return g;
}

template <typename T>
nn::ParamList<T> Discriminator<T>::parameters() {
  nn::ParamList<T> out;
  for (std::size_t l = 0; l < arch_.layers.size(); ++l) {
    conv_[l].collect(out);
    if (arch_.layers[l].norm) bn_[l].collect(out);
  }
  return out;
}

template <typename T>
std::vector<const nn::Param<T>*> Discriminator<T>::parameters() const {
  auto params = const_cast<Discriminator*>(this)->parameters();
  return {params.begin(), params.end()};
}

template <typename T>
std::size_t Discriminator<T>::weight_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) {
    if (p->trainable) total += p->value.size();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Initialization

template <typename T>
void init_weights(nn::ParamList<T> params, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.02);
  for (auto* p : params) {
    if (!p->trainable) continue;
    const bool norm_param = p->name.find(".norm.") != std::string::npos;
    const bool is_bias = p->name.ends_with(".bias");
    for (auto& v : p->value.vec()) {
      if (is_bias) {
        v = T(0);
      } else {
        v = static_cast<T>((norm_param ? 1.0 : 0.0) + normal(rng));
      }
    }
  }
}

template <typename T>
ModelSet<T> init_params(const GeneratorArch& gen_arch, const DiscriminatorArch& disc_arch,
                        std::uint64_t seed) {
  ModelSet<T> set;
  set.g = std::make_unique<Generator<T>>(GeneratorRole::kG, gen_arch);
  set.f = std::make_unique<Generator<T>>(GeneratorRole::kF, gen_arch);
  set.d_a = std::make_unique<Discriminator<T>>(DiscriminatorRole::kDa, disc_arch);
  set.d_b = std::make_unique<Discriminator<T>>(DiscriminatorRole::kDb, disc_arch);
  std::mt19937_64 rng(seed);
  init_weights(set.g->parameters(), rng);
  init_weights(set.f->parameters(), rng);
  init_weights(set.d_a->parameters(), rng);
  init_weights(set.d_b->parameters(), rng);
  return set;
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template void init_weights<float>(nn::ParamList<float>, std::mt19937_64&);
template void init_weights<double>(nn::ParamList<double>, std::mt19937_64&);
template ModelSet<float> init_params<float>(const GeneratorArch&, const DiscriminatorArch&,
                                            std::uint64_t);
template ModelSet<double> init_params<double>(const GeneratorArch&, const DiscriminatorArch&,
                                              std::uint64_t);

}  // namespace sigan::models
