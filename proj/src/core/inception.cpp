// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/eval/inception.hpp"

#include <cmath>

#include <fmt/format.h>

#include "sigan/models/checkpoint.hpp"

namespace fs = std::filesystem;

namespace sigan::eval {

namespace {

constexpr float kBnEps = 1e-3f;

/// Conv (no bias) + BatchNorm + ReLU, with the normalization folded into the conv.
struct BasicConv {
  std::string name;
  int in = 0, out = 0;
  nn::ConvGeometry geom;
  nn::Conv2d<float> conv;

  BasicConv() = default;
  BasicConv(std::string n, int i, int o, int kh, int kw, int sh = 1, int sw = 1, int ph = 0,
            int pw = 0)
      : name(std::move(n)), in(i), out(o), geom{kh, kw, sh, sw, ph, pw},
        conv(name + ".conv", i, o, geom, true) {}

  Tensor<float> operator()(const Tensor<float>& x) const {
    Tensor<float> y = conv.forward(x);
    for (float& v : y.vec()) v = std::max(v, 0.0f);
    return y;
  }

  void expected(std::map<std::string, Shape>& out_map) const {
    out_map[name + ".conv.weight"] = {out, in, geom.kh, geom.kw};
    for (const char* p : {"weight", "bias", "running_mean", "running_var"}) {
      out_map[name + ".bn." + p] = {out, 1, 1, 1};
    }
  }

  void load(const std::map<std::string, Tensor<float>>& arrays) {
    auto get = [&](const std::string& key, const Shape& shape) -> const Tensor<float>& {
      auto it = arrays.find(key);
      if (it == arrays.end()) throw IoError("inception weights: missing array '" + key + "'");
      if (it->second.size() != shape.numel()) {
        throw IoError(fmt::format("inception weights: '{}' has {} values, expected {}", key,
                                  it->second.size(), shape.numel()));
      }
      return it->second;
    };
    const auto& w = get(name + ".conv.weight", {out, in, geom.kh, geom.kw});
    const auto& gamma = get(name + ".bn.weight", {out, 1, 1, 1});
    const auto& beta = get(name + ".bn.bias", {out, 1, 1, 1});
    const auto& mean = get(name + ".bn.running_mean", {out, 1, 1, 1});
    const auto& var = get(name + ".bn.running_var", {out, 1, 1, 1});
    const std::size_t per_out = static_cast<std::size_t>(in) * geom.kh * geom.kw;
    for (int o = 0; o < out; ++o) {
      const double scale = gamma[o] / std::sqrt(static_cast<double>(var[o]) + kBnEps);
      for (std::size_t k = 0; k < per_out; ++k) {
        conv.weight.value[o * per_out + k] = static_cast<float>(w[o * per_out + k] * scale);
      }
      conv.bias.value[o] = static_cast<float>(beta[o] - mean[o] * scale);
    }
  }
};

Tensor<float> concat(const std::vector<Tensor<float>>& parts) {
  Tensor<float> out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = concat_channels(out, parts[i]);
  return out;
}

Tensor<float> avg3(const Tensor<float>& x) { return nn::avg_pool(x, {3, 3, 1, 1, 1, 1}, true); }
Tensor<float> max3s2(const Tensor<float>& x) { return nn::max_pool(x, {3, 3, 2, 2, 0, 0}); }

struct Block {
  virtual ~Block() = default;
  virtual Tensor<float> operator()(const Tensor<float>& x) const = 0;
  virtual std::vector<BasicConv*> convs() = 0;
};

struct InceptionA : Block {
  BasicConv b1, b5_1, b5_2, b3_1, b3_2, b3_3, pool;
  InceptionA(const std::string& n, int in, int pool_features)
      : b1(n + ".branch1x1", in, 64, 1, 1),
        b5_1(n + ".branch5x5_1", in, 48, 1, 1),
        b5_2(n + ".branch5x5_2", 48, 64, 5, 5, 1, 1, 2, 2),
        b3_1(n + ".branch3x3dbl_1", in, 64, 1, 1),
        b3_2(n + ".branch3x3dbl_2", 64, 96, 3, 3, 1, 1, 1, 1),
        b3_3(n + ".branch3x3dbl_3", 96, 96, 3, 3, 1, 1, 1, 1),
        pool(n + ".branch_pool", in, pool_features, 1, 1) {}
  Tensor<float> operator()(const Tensor<float>& x) const override {
    return concat({b1(x), b5_2(b5_1(x)), b3_3(b3_2(b3_1(x))), pool(avg3(x))});
  }
  std::vector<BasicConv*> convs() override { return {&b1, &b5_1, &b5_2, &b3_1, &b3_2, &b3_3, &pool}; }
};

struct InceptionB : Block {
  BasicConv b3, d1, d2, d3;
  InceptionB(const std::string& n, int in)
      : b3(n + ".branch3x3", in, 384, 3, 3, 2, 2),
        d1(n + ".branch3x3dbl_1", in, 64, 1, 1),
        d2(n + ".branch3x3dbl_2", 64, 96, 3, 3, 1, 1, 1, 1),
        d3(n + ".branch3x3dbl_3", 96, 96, 3, 3, 2, 2) {}
  Tensor<float> operator()(const Tensor<float>& x) const override {
    return concat({b3(x), d3(d2(d1(x))), max3s2(x)});
  }
  std::vector<BasicConv*> convs() override { return {&b3, &d1, &d2, &d3}; }
};

struct InceptionC : Block {
  BasicConv b1, s1, s2, s3, d1, d2, d3, d4, d5, pool;
  InceptionC(const std::string& n, int in, int c7)
      : b1(n + ".branch1x1", in, 192, 1, 1),
        s1(n + ".branch7x7_1", in, c7, 1, 1),
        s2(n + ".branch7x7_2", c7, c7, 1, 7, 1, 1, 0, 3),
        s3(n + ".branch7x7_3", c7, 192, 7, 1, 1, 1, 3, 0),
        d1(n + ".branch7x7dbl_1", in, c7, 1, 1),
        d2(n + ".branch7x7dbl_2", c7, c7, 7, 1, 1, 1, 3, 0),
        d3(n + ".branch7x7dbl_3", c7, c7, 1, 7, 1, 1, 0, 3),
        d4(n + ".branch7x7dbl_4", c7, c7, 7, 1, 1, 1, 3, 0),
        d5(n + ".branch7x7dbl_5", c7, 192, 1, 7, 1, 1, 0, 3),
        pool(n + ".branch_pool", in, 192, 1, 1) {}
  Tensor<float> operator()(const Tensor<float>& x) const override {
    return concat({b1(x), s3(s2(s1(x))), d5(d4(d3(d2(d1(x))))), pool(avg3(x))});
  }
  std::vector<BasicConv*> convs() override {
    return {&b1, &s1, &s2, &s3, &d1, &d2, &d3, &d4, &d5, &pool};
  }
};

struct InceptionD : Block {
  BasicConv t1, t2, s1, s2, s3, s4;
  InceptionD(const std::string& n, int in)
      : t1(n + ".branch3x3_1", in, 192, 1, 1),
        t2(n + ".branch3x3_2", 192, 320, 3, 3, 2, 2),
        s1(n + ".branch7x7x3_1", in, 192, 1, 1),
        s2(n + ".branch7x7x3_2", 192, 192, 1, 7, 1, 1, 0, 3),
        s3(n + ".branch7x7x3_3", 192, 192, 7, 1, 1, 1, 3, 0),
        s4(n + ".branch7x7x3_4", 192, 192, 3, 3, 2, 2) {}
  Tensor<float> operator()(const Tensor<float>& x) const override {
    return concat({t2(t1(x)), s4(s3(s2(s1(x)))), max3s2(x)});
  }
  std::vector<BasicConv*> convs() override { return {&t1, &t2, &s1, &s2, &s3, &s4}; }
};

struct InceptionE : Block {
  BasicConv b1, t1, t2a, t2b, d1, d2, d3a, d3b, pool;
  InceptionE(const std::string& n, int in)
      : b1(n + ".branch1x1", in, 320, 1, 1),
        t1(n + ".branch3x3_1", in, 384, 1, 1),
        t2a(n + ".branch3x3_2a", 384, 384, 1, 3, 1, 1, 0, 1),
        t2b(n + ".branch3x3_2b", 384, 384, 3, 1, 1, 1, 1, 0),
        d1(n + ".branch3x3dbl_1", in, 448, 1, 1),
        d2(n + ".branch3x3dbl_2", 448, 384, 3, 3, 1, 1, 1, 1),
        d3a(n + ".branch3x3dbl_3a", 384, 384, 1, 3, 1, 1, 0, 1),
        d3b(n + ".branch3x3dbl_3b", 384, 384, 3, 1, 1, 1, 1, 0),
        pool(n + ".branch_pool", in, 192, 1, 1) {}
  Tensor<float> operator()(const Tensor<float>& x) const override {
    const Tensor<float> t = t1(x);
    const Tensor<float> d = d2(d1(x));
    return concat({b1(x), t2a(t), t2b(t), d3a(d), d3b(d), pool(avg3(x))});
  }
  std::vector<BasicConv*> convs() override {
    return {&b1, &t1, &t2a, &t2b, &d1, &d2, &d3a, &d3b, &pool};
  }
};

}  // namespace

struct InceptionV3Extractor::Net {
  BasicConv c1a{"Conv2d_1a_3x3", 3, 32, 3, 3, 2, 2};
  BasicConv c2a{"Conv2d_2a_3x3", 32, 32, 3, 3};
  BasicConv c2b{"Conv2d_2b_3x3", 32, 64, 3, 3, 1, 1, 1, 1};
  BasicConv c3b{"Conv2d_3b_1x1", 64, 80, 1, 1};
  BasicConv c4a{"Conv2d_4a_3x3", 80, 192, 3, 3};
  std::vector<std::unique_ptr<Block>> blocks;

  Net() {
    blocks.push_back(std::make_unique<InceptionA>("Mixed_5b", 192, 32));
    blocks.push_back(std::make_unique<InceptionA>("Mixed_5c", 256, 64));
    blocks.push_back(std::make_unique<InceptionA>("Mixed_5d", 288, 64));
    blocks.push_back(std::make_unique<InceptionB>("Mixed_6a", 288));
    blocks.push_back(std::make_unique<InceptionC>("Mixed_6b", 768, 128));
    blocks.push_back(std::make_unique<InceptionC>("Mixed_6c", 768, 160));
    blocks.push_back(std::make_unique<InceptionC>("Mixed_6d", 768, 160));
    blocks.push_back(std::make_unique<InceptionC>("Mixed_6e", 768, 192));
    blocks.push_back(std::make_unique<InceptionD>("Mixed_7a", 768));
    blocks.push_back(std::make_unique<InceptionE>("Mixed_7b", 1280));
    blocks.push_back(std::make_unique<InceptionE>("Mixed_7c", 2048));
  }

  std::vector<BasicConv*> all() {
    std::vector<BasicConv*> out{&c1a, &c2a, &c2b, &c3b, &c4a};
    for (auto& b : blocks) {
      for (auto* c : b->convs()) out.push_back(c);
    }
    return out;
  }

  Tensor<float> forward(const Tensor<float>& x) const {
    Tensor<float> h = c2b(c2a(c1a(x)));
    h = max3s2(h);
    h = c4a(c3b(h));
    h = max3s2(h);
    for (const auto& b : blocks) h = (*b)(h);
    return nn::global_avg_pool(h);
  }
};

InceptionV3Extractor::InceptionV3Extractor(const fs::path& weights_dir)
    : net_(std::make_unique<Net>()) {
  if (!fs::exists(weights_dir / models::kMetadataFile)) {
    throw IoError("InceptionV3 weights not found in " + weights_dir.string() +
                  "; run scripts/export_inception_weights.py (writes to $SIGAN_CACHE/inception_v3)");
  }
  const auto td = models::read_tensor_dir(weights_dir);
  for (auto* c : net_->all()) c->load(td.tensors);
}

InceptionV3Extractor::~InceptionV3Extractor() = default;

std::map<std::string, Shape> InceptionV3Extractor::expected_arrays() {
  Net net;
  std::map<std::string, Shape> out;
  for (auto* c : net.all()) c->expected(out);
  return out;
}

Tensor<float> InceptionV3Extractor::features(const Tensor<float>& x) const {
  if (x.shape().c != 3) throw ShapeError("inception input must have 3 channels, got " + x.shape().str());
  return net_->forward(x);
}

std::vector<double> InceptionV3Extractor::extract(const data::PixelGrid& image) const {
  const auto resized = data::resize_bilinear(image.values, image.height, image.width,
                                             kInceptionInputSize, kInceptionInputSize);
  Tensor<float> x({1, 3, kInceptionInputSize, kInceptionInputSize});
  const std::size_t plane = resized.size();
  for (int c = 0; c < 3; ++c) std::copy(resized.begin(), resized.end(), x.data() + c * plane);
  const Tensor<float> f = features(x);
  return {f.vec().begin(), f.vec().end()};
}

}  // namespace sigan::eval
