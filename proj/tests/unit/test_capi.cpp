// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include <cstring>
#include <fstream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "sigan/eval/extractors.hpp"
#include "sigan/models/checkpoint.hpp"
#include "sigan/sigan.h"
#include "support/oracles.hpp"
#include "support/scratch.hpp"
#include "support/synthetic.hpp"

using sigan::testing::ScratchDir;
using Json = nlohmann::json;

namespace {

struct Context {
  sigan_context* ctx = nullptr;
  Context() {
    REQUIRE(sigan_context_create(&ctx) == SIGAN_OK);
    sigan_set_log_level(ctx, SIGAN_LOG_ERROR);
  }
  ~Context() { sigan_context_destroy(ctx); }
  std::string error() const { return sigan_last_error(ctx); }
};

/// Runs a command and returns its status; the result is parsed on success.
sigan_status run(Context& c, const char* command, const std::string& request, Json* result = nullptr) {
  char* out = nullptr;
  const sigan_status s = sigan_run(c.ctx, command, request.c_str(), &out);
  if (s == SIGAN_OK) {
    REQUIRE(out != nullptr);
    if (result) *result = Json::parse(out);
    sigan_string_free(out);
  } else {
    CHECK(out == nullptr);
  }
  return s;
}

sigan::models::GeneratorArch small_arch() {
  sigan::models::GeneratorArch a;
  a.image_size = 32;
  a.widths = {4, 8, 8};
  return a;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(sigan_status_name(SIGAN_OK)) == "ok");
  CHECK(std::string(sigan_status_name(SIGAN_ERR_INVALID_ARGUMENT)) == "invalid_argument");
  CHECK(std::string(sigan_status_name(SIGAN_ERR_CONFIG)) == "config");
  CHECK(std::string(sigan_status_name(SIGAN_ERR_DATASET_LAYOUT)) == "dataset_layout");
  CHECK(std::string(sigan_status_name(SIGAN_ERR_IO)) == "io");
  CHECK(std::string(sigan_status_name(SIGAN_ERR_SHAPE)) == "shape");
  CHECK(std::string(sigan_status_name(SIGAN_ERR_ROLE)) == "role");
  CHECK(std::string(sigan_status_name(SIGAN_ERR_NUMERIC)) == "numeric");
  CHECK(std::string(sigan_status_name(SIGAN_ERR_INTERNAL)) == "internal");
  CHECK(std::string(sigan_status_name(static_cast<sigan_status>(42))) == "unknown");
  CHECK(std::strlen(sigan_version()) > 0);
}

TEST_CASE("null arguments are rejected") {
  CHECK(sigan_context_create(nullptr) == SIGAN_ERR_INVALID_ARGUMENT);
  char* out = nullptr;
  CHECK(sigan_run(nullptr, "train", "{}", &out) == SIGAN_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sigan_last_error(nullptr)) == "null context");
  Context c;
  CHECK(sigan_run(c.ctx, nullptr, "{}", &out) == SIGAN_ERR_INVALID_ARGUMENT);
  CHECK(sigan_run(c.ctx, "train", "{}", nullptr) == SIGAN_ERR_INVALID_ARGUMENT);
  CHECK(sigan_config_keys(c.ctx, nullptr) == SIGAN_ERR_INVALID_ARGUMENT);
  CHECK(sigan_set_log_level(c.ctx, static_cast<sigan_log_level>(9)) == SIGAN_ERR_INVALID_ARGUMENT);
  sigan_generator* g = nullptr;
  CHECK(sigan_generator_load(c.ctx, nullptr, SIGAN_ROLE_G, &g) == SIGAN_ERR_INVALID_ARGUMENT);
  CHECK(sigan_generator_load(c.ctx, "x", static_cast<sigan_role>(5), &g) == SIGAN_ERR_INVALID_ARGUMENT);
  sigan_context_destroy(nullptr);
  sigan_generator_destroy(nullptr);
  sigan_string_free(nullptr);
}

TEST_CASE("errors map to status codes and messages") {
  Context c;
  CHECK(run(c, "transmogrify", "{}") == SIGAN_ERR_INVALID_ARGUMENT);
  CHECK(c.error().find("transmogrify") != std::string::npos);
  CHECK(run(c, "train", "{not json") == SIGAN_ERR_INVALID_ARGUMENT);
  CHECK(c.error().find("malformed JSON") != std::string::npos);
  CHECK(run(c, "train", "[1, 2]") == SIGAN_ERR_CONFIG);
  CHECK(run(c, "train", "{}") == SIGAN_ERR_CONFIG);
  CHECK(c.error().find("data") != std::string::npos);
  ScratchDir dir("capi-err");
  const Json bad_data{{"data", (dir / "nowhere").string()}, {"out", (dir / "run").string()}};
  CHECK(run(c, "train", bad_data.dump()) == SIGAN_ERR_DATASET_LAYOUT);
  const Json bad_cfg{{"data", (dir / "nowhere").string()}, {"out", (dir / "run").string()},
                     {"overrides", {{"lambda1", "-1"}}}};
  CHECK(run(c, "train", bad_cfg.dump()) == SIGAN_ERR_CONFIG);
  char* keys = nullptr;
  REQUIRE(sigan_config_keys(c.ctx, &keys) == SIGAN_OK);
  CHECK(c.error().empty());
  const auto k = Json::parse(keys);
  sigan_string_free(keys);
  CHECK(k.size() == 25);
  CHECK(k[0] == "batch_size");
}

TEST_CASE("fid through the C interface matches the library") {
  ScratchDir dir("capi-fid");
  for (int i = 0; i < 6; ++i) {
    for (auto [sub, shift] : {std::pair{"real", 0.0f}, std::pair{"fake", 0.3f}}) {
      auto g = sigan::testing::cell_background(32, 50 + i + (shift > 0 ? 100 : 0));
      for (auto& v : g.values) v = std::clamp(v + shift, -1.0f, 1.0f);
      std::filesystem::create_directories(dir / sub);
      const auto file = dir / sub / fmt::format("img_{}.png", i);
      sigan::data::write_gray_png(file, sigan::data::to_gray8(g));
    }
  }
  const auto real = sigan::data::load_image_dir(dir / "real", sigan::data::DefectClass::kDefectFree);
  const auto fake = sigan::data::load_image_dir(dir / "fake", sigan::data::DefectClass::kDefectFree);
  const sigan::eval::MeanPixelExtractor ex;
  const double expected =
      sigan::eval::fid(sigan::eval::extract_features(real, ex), sigan::eval::extract_features(fake, ex)).score;

  Context c;
  Json result;
  const Json req{{"real", (dir / "real").string()},
                 {"fake", (dir / "fake").string()},
                 {"out", (dir / "out").string()},
                 {"extractor", "mean_pixel"}};
  REQUIRE(run(c, "evaluate-fid", req.dump(), &result) == SIGAN_OK);
  // results are rounded to four decimals
  CHECK(std::abs(result["score"].get<double>() - expected) <= 0.5e-4);
  CHECK(result["extractor_id"] == "mean_pixel");
  CHECK(std::filesystem::exists(dir / "out" / "fid.json"));
  std::ifstream in(dir / "out" / "run_manifest.json");
  const auto manifest = Json::parse(in);
  CHECK(manifest["command"] == "evaluate-fid");
  CHECK(!manifest["artifacts"].empty());
}

TEST_CASE("generator handles load, describe and run") {
  ScratchDir dir("capi-gen");
  auto m = sigan::models::init_params<float>(small_arch(), sigan::models::DiscriminatorArch{}, 3);
  sigan::models::CheckpointInfo info;
  info.training_step = 77;
  sigan::models::save_generator(*m.f, dir / "F", info);

  Context c;
  sigan_generator* gen = nullptr;
  CHECK(sigan_generator_load(c.ctx, (dir / "missing").c_str(), SIGAN_ROLE_F, &gen) == SIGAN_ERR_IO);
  CHECK(gen == nullptr);
  CHECK(sigan_generator_load(c.ctx, (dir / "F").c_str(), SIGAN_ROLE_G, &gen) == SIGAN_ERR_ROLE);
  CHECK(gen == nullptr);
  REQUIRE(sigan_generator_load(c.ctx, dir.path().c_str(), SIGAN_ROLE_F, &gen) == SIGAN_OK);

  char* info_json = nullptr;
  REQUIRE(sigan_generator_info(c.ctx, gen, &info_json) == SIGAN_OK);
  const auto j = Json::parse(info_json);
  sigan_string_free(info_json);
  CHECK(j["role"] == std::string(sigan::models::role_name(sigan::models::GeneratorRole::kF)));
  CHECK(j["training_step"] == 77);
  CHECK(j["weight_count"] == m.f->weight_count());

  std::mt19937_64 rng(4);
  const auto x = sigan::testing::random_tensor<float>({2, 1, 32, 32}, rng);
  const auto expected = m.f->infer(x);
  std::vector<float> out(x.size());
  REQUIRE(sigan_generator_forward(c.ctx, gen, x.data(), 2, 1, 32, 32, out.data()) == SIGAN_OK);
  CHECK(out == expected.vec());
  CHECK(sigan_generator_forward(c.ctx, gen, x.data(), 1, 1, 16, 16, out.data()) == SIGAN_ERR_SHAPE);
  CHECK(!c.error().empty());
  CHECK(sigan_generator_forward(c.ctx, gen, x.data(), 0, 1, 32, 32, out.data()) ==
        SIGAN_ERR_INVALID_ARGUMENT);
  CHECK(sigan_generator_forward(c.ctx, gen, nullptr, 1, 1, 32, 32, out.data()) ==
        SIGAN_ERR_INVALID_ARGUMENT);
  sigan_generator_destroy(gen);
}
