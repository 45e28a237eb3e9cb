// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include <random>
#include <string>

#include "doctest.h"
#include "sigan/models/networks.hpp"
#include "support/oracles.hpp"

using namespace sigan;
using namespace sigan::models;
using sigan::testing::random_tensor;

namespace {

/// Spatial size after a conv with kernel k, stride s, padding p.
int conv_out(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

/// Independent count of learnable scalars from the layout rules alone: 4x4
/// kernels, batch norm on inner encoder blocks and on every decoder block but
/// the last, biases only where no norm follows, a 1x1 projection when the
/// attention has to be pooled.
std::size_t generator_oracle(const GeneratorArch& a, bool projection) {
  const auto& w = a.widths;
  const int depth = static_cast<int>(w.size());
  std::size_t n = 0;
  for (int i = 0; i < depth; ++i) {
    const std::size_t in = i == 0 ? a.in_channels : w[i - 1];
    n += in * w[i] * 16;
    const bool norm = i > 0 && i < depth - 1;
    n += norm ? 2 * w[i] : w[i];
  }
  for (int i = 0; i < depth; ++i) {
    const std::size_t in = i == depth - 1 ? w[depth - 1] : 2 * w[i];
    const std::size_t out = i == 0 ? a.out_channels : w[i - 1];
    n += in * out * 16;
    n += i == 0 ? out : 2 * out;
  }
  if (projection) {
    const std::size_t c = depth == 1 ? w[0] : 2 * w[0];
    n += c * c;
  }
  return n;
}

GeneratorArch small_arch(int size, std::vector<int> widths) {
  GeneratorArch a;
  a.image_size = size;
  a.widths = std::move(widths);
  return a;
}

}  // namespace

TEST_CASE("discriminator patch map sizes follow the conv arithmetic") {
  DiscriminatorArch arch;
  CHECK(arch.is_default_layout());
  Discriminator<float> d(DiscriminatorRole::kDa, arch);
  std::mt19937_64 rng(1);
  auto params = d.parameters();
  init_weights(params, rng);

  for (int size : {256, 128, 64, 48}) {
    int side = size;
    for (const auto& l : arch.layers) side = conv_out(side, l.kernel, l.stride, l.padding);
    const Shape in{1, 1, size, size};
    CHECK(arch.output_shape(in) == Shape{1, 1, side, side});
    if (size == 256) CHECK(side == 30);
    if (size == 128) CHECK(side == 14);
  }
  const auto y = d.infer(random_tensor<float>({1, 1, 256, 256}, rng));
  CHECK(y.shape() == Shape{1, 1, 30, 30});
  CHECK(y.all_finite());
  const auto y4 = d.infer(random_tensor<float>({4, 1, 128, 128}, rng));
  CHECK(y4.shape() == Shape{4, 1, 14, 14});

  Tensor<float> bad({1, 1, 64, 64}, 0.0f);
  bad[5] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(d.infer(bad), NumericError);
}

TEST_CASE("discriminator weight count") {
  DiscriminatorArch arch;
  Discriminator<float> d(DiscriminatorRole::kDb, arch);
  // 64+128+256+512 filters with BN (no conv bias), last conv with bias
  const std::size_t expected = 1 * 64 * 16 + 2 * 64 + 64 * 128 * 16 + 2 * 128 + 128 * 256 * 16 +
                               2 * 256 + 256 * 512 * 16 + 2 * 512 + 512 * 1 * 16 + 1;
  CHECK(d.weight_count() == expected);
}

TEST_CASE("generator weight count matches the descriptor total") {
  GeneratorArch def;
  Generator<float> g(GeneratorRole::kG, def);
  CHECK(g.nonlocal().reduction() == 2);
  CHECK(g.weight_count() == generator_oracle(def, true));

  auto small = small_arch(32, {4, 8, 8});
  Generator<float> gs(GeneratorRole::kF, small);
  CHECK(gs.nonlocal().reduction() == 1);
  CHECK(gs.weight_count() == generator_oracle(small, false));
}

TEST_CASE("generator output keeps the input shape and stays in [-1, 1]") {
  std::mt19937_64 rng(2);
  for (auto [size, widths] : {std::pair{64, std::vector<int>{8, 16, 16, 16, 16, 16}},
                              std::pair{32, std::vector<int>{4, 8}},
                              std::pair{256, std::vector<int>{4, 4, 4, 4, 4, 4, 4, 4}}}) {
    auto arch = small_arch(size, widths);
    auto m = init_params<float>(arch, DiscriminatorArch{}, 3);
    // larger weights push the tanh towards saturation
    for (auto* p : m.g->parameters()) {
      if (p->trainable) {
        for (auto& v : p->value.vec()) v *= 5.0f;
      }
    }
    const auto x = random_tensor<float>({2, 1, size, size}, rng);
    for (const auto& y : {m.g->infer(x), m.f->infer(x)}) {
      CHECK(y.shape() == x.shape());
      for (float v : y.vec()) {
        REQUIRE(v >= -1.0f);
        REQUIRE(v <= 1.0f);
      }
    }
    typename Generator<float>::Tape tape;
    const auto yt = m.g->forward(x, &tape);
    CHECK(yt.shape() == x.shape());
    CHECK(yt.all_finite());
  }
}

TEST_CASE("default generator at 256") {
  auto m = init_params<float>(GeneratorArch{}, DiscriminatorArch{}, 4);
  std::mt19937_64 rng(5);
  const auto x = random_tensor<float>({1, 1, 256, 256}, rng);
  const auto y = m.g->infer(x);
  CHECK(y.shape() == Shape{1, 1, 256, 256});
  CHECK(y.all_finite());
}

TEST_CASE("generator rejects inputs of the wrong size") {
  Generator<float> g(GeneratorRole::kG, small_arch(32, {4, 8}));
  try {
    g.infer(Tensor<float>({1, 1, 64, 64}));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("32") != std::string::npos);
    CHECK(msg.find("64") != std::string::npos);
  }
  CHECK_THROWS_AS(g.infer(Tensor<float>({1, 2, 32, 32})), ShapeError);
}

TEST_CASE("initialization is deterministic and follows the stated distribution") {
  const auto arch = small_arch(32, {16, 32, 32});
  auto a = init_params<float>(arch, DiscriminatorArch{}, 9);
  auto b = init_params<float>(arch, DiscriminatorArch{}, 9);
  auto c = init_params<float>(arch, DiscriminatorArch{}, 10);
  const auto pa = a.g->parameters(), pb = b.g->parameters(), pc = c.g->parameters();
  REQUIRE(pa.size() == pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value.vec() == pb[i]->value.vec());
    differs = differs || pa[i]->value.vec() != pc[i]->value.vec();
  }
  CHECK(differs);
  CHECK(a.d_b->parameters().back()->value.vec() == b.d_b->parameters().back()->value.vec());

  // conv weights: sample mean ~ 0 and std ~ 0.02 over the discriminator
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (auto* p : a.d_a->parameters()) {
    if (p->name.ends_with(".conv.weight")) {
      for (float v : p->value.vec()) {
        sum += v;
        sq += static_cast<double>(v) * v;
        ++n;
      }
    }
    if (p->name.ends_with(".bias")) {
      for (float v : p->value.vec()) CHECK(v == 0.0f);
    }
  }
  const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 1e-3);
  CHECK(sd == doctest::Approx(0.02).epsilon(0.01));
  // G and F are drawn from one stream, so they differ
  CHECK(a.g->parameters()[0]->value.vec() != a.f->parameters()[0]->value.vec());
}

TEST_CASE("invalid architectures are rejected") {
  CHECK_THROWS_AS(Generator<float>(GeneratorRole::kG, small_arch(32, {4, -8})), ConfigError);
  CHECK_THROWS_AS(Generator<float>(GeneratorRole::kG, small_arch(32, {4, 0})), ConfigError);
  CHECK_THROWS_AS(Generator<float>(GeneratorRole::kG, small_arch(36, {4, 4, 4})), ConfigError);
  CHECK_THROWS_AS(Generator<float>(GeneratorRole::kG, small_arch(32, {})), ConfigError);
  DiscriminatorArch d;
  d.layers[1].filters = -128;
  CHECK_THROWS_AS(Discriminator<float>(DiscriminatorRole::kDa, d), ConfigError);
  CHECK(parse_generator_role("F") == GeneratorRole::kF);
  CHECK_THROWS_AS(parse_generator_role("H"), RoleError);
  CHECK_THROWS_AS(parse_norm("layer"), ConfigError);
}

TEST_CASE("forward passes are deterministic") {
  const auto arch = small_arch(32, {8, 8, 8});
  auto m = init_params<float>(arch, DiscriminatorArch{}, 12);
  std::mt19937_64 rng(13);
  const auto x = random_tensor<float>({3, 1, 32, 32}, rng);
  CHECK(m.g->infer(x).vec() == m.g->infer(x).vec());
  CHECK(m.d_a->infer(x).vec() == m.d_a->infer(x).vec());
  typename Generator<float>::Tape t1, t2;
  CHECK(m.f->forward(x, &t1).vec() == m.f->forward(x, &t2).vec());
}

TEST_CASE("float and double networks agree") {
  const auto arch = small_arch(16, {4, 4});
  auto md = init_params<double>(arch, DiscriminatorArch{}, 14);
  auto mf = init_params<float>(arch, DiscriminatorArch{}, 14);
  std::mt19937_64 rng(15);
  const auto x = random_tensor<double>({2, 1, 16, 16}, rng);
  const auto yd = md.g->infer(x);
  const auto yf = mf.g->infer(x.cast<float>());
  for (std::size_t i = 0; i < yd.size(); ++i) CHECK(yf[i] == doctest::Approx(yd[i]).epsilon(1e-4));
}
