// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include <fstream>
#include <set>

#include "doctest.h"
#include "sigan/aug/augmentation.hpp"
#include "support/scratch.hpp"
#include "support/synthetic.hpp"

using namespace sigan;
using namespace sigan::aug;
using data::DefectClass;
using testing::ScratchDir;
namespace fs = std::filesystem;

namespace {

std::vector<data::ImageSample> free_pool(int n, int size = 16) {
  std::vector<data::ImageSample> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(testing::as_sample(fmt::format("defect_free/cell_{:02d}", i),
                                     testing::cell_background(size, 100 + i),
                                     DefectClass::kDefectFree));
  }
  return out;
}

seg::FunctionTranslator negate() {
  return seg::FunctionTranslator(models::GeneratorRole::kG, [](const Tensor<float>& x) {
    Tensor<float> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = -y[i];
    return y;
  });
}

std::vector<std::string> sources(const AugmentationManifest& m) {
  std::vector<std::string> out;
  for (const auto& e : m.entries) out.push_back(e.source_id);
  return out;
}

}  // namespace

TEST_CASE("zero requested images yields an empty manifest") {
  ScratchDir dir("aug0");
  GenerateOptions opts;
  opts.count = 0;
  const auto m = generate_defective(free_pool(3), negate(), opts, dir / "out");
  CHECK(m.entries.empty());
  CHECK(m.counts.at(DefectClass::kCrack).fake == 0);
  CHECK(fs::exists(dir / "out" / kManifestFile));
  CHECK(AugmentationManifest::read(dir / "out" / kManifestFile).entries.empty());
}

TEST_CASE("generated files hold the translated pixels") {
  ScratchDir dir("aug1");
  const auto pool = free_pool(4);
  GenerateOptions opts;
  opts.count = 3;
  opts.seed = 5;
  opts.target_class = DefectClass::kFingerInterruption;
  opts.checkpoint_label = "run/epoch_0060";
  const auto m = generate_defective(pool, negate(), opts, dir.path());
  REQUIRE(m.entries.size() == 3);
  CHECK(m.counts.at(DefectClass::kFingerInterruption).fake == 3);
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    CHECK(e.target_class == DefectClass::kFingerInterruption);
    CHECK(e.provenance == data::Provenance::kGenerated);
    CHECK(e.generator_checkpoint == "run/epoch_0060");
    CHECK(e.output_path.rfind("finger_interruption/", 0) == 0);
    if (i > 0) CHECK(m.entries[i - 1].source_id <= e.source_id);
    distinct.insert(e.source_id);
    const auto it = std::find_if(pool.begin(), pool.end(), [&](const auto& s) { return s.id == e.source_id; });
    REQUIRE(it != pool.end());
    data::PixelGrid expected = it->pixels;
    for (auto& v : expected.values) v = -v;
    const auto written = data::read_gray_image(dir / e.output_path);
    CHECK(written.values == data::to_gray8(expected).values);
  }
  CHECK(distinct.size() == 3);
}

TEST_CASE("generation is a function of the seed") {
  ScratchDir dir("aug2");
  const auto pool = free_pool(10);
  GenerateOptions opts;
  opts.count = 4;
  opts.seed = 11;
  const auto a = generate_defective(pool, negate(), opts, dir / "a");
  const auto b = generate_defective(pool, negate(), opts, dir / "b");
  CHECK(a.to_json() == b.to_json());
  bool differs = false;
  for (std::uint64_t seed = 12; seed < 20 && !differs; ++seed) {
    opts.seed = seed;
    opts.overwrite = true;
    differs = sources(generate_defective(pool, negate(), opts, dir / "c")) != sources(a);
  }
  CHECK(differs);
}

TEST_CASE("sampling past the pool needs replacement") {
  ScratchDir dir("aug3");
  const auto pool = free_pool(3);
  GenerateOptions opts;
  opts.count = 7;
  CHECK_THROWS_AS(generate_defective(pool, negate(), opts, dir / "x"), ConfigError);
  opts.with_replacement = true;
  const auto m = generate_defective(pool, negate(), opts, dir / "y");
  CHECK(m.entries.size() == 7);
  std::set<std::string> files, used;
  for (const auto& e : m.entries) {
    files.insert(e.output_path);
    used.insert(e.source_id);
  }
  CHECK(files.size() == 7);
  CHECK(used.size() == 3);
  CHECK(fs::exists(dir / "y" / m.entries.back().output_path));
}

TEST_CASE("generation argument errors") {
  ScratchDir dir("aug4");
  const auto pool = free_pool(2);
  GenerateOptions opts;
  opts.count = 1;
  seg::FunctionTranslator f(models::GeneratorRole::kF, [](const Tensor<float>& x) { return x; });
  CHECK_THROWS_AS(generate_defective(pool, f, opts, dir / "a"), RoleError);
  opts.target_class = DefectClass::kDefectFree;
  CHECK_THROWS_AS(generate_defective(pool, negate(), opts, dir / "a"), ConfigError);
  opts.target_class = DefectClass::kCrack;
  opts.count = -1;
  CHECK_THROWS_AS(generate_defective(pool, negate(), opts, dir / "a"), ConfigError);
  opts.count = 1;
  generate_defective(pool, negate(), opts, dir / "b");
  CHECK_THROWS_AS(generate_defective(pool, negate(), opts, dir / "b"), IoError);
  opts.overwrite = true;
  CHECK_NOTHROW(generate_defective(pool, negate(), opts, dir / "b"));
}

TEST_CASE("manifest JSON round trip and validation") {
  AugmentationManifest m;
  m.seed = 18446744073709551615ULL;
  m.entries.push_back({"crack/fake_a_0.png", "defect_free/a", "ckpt", DefectClass::kCrack,
                       data::Provenance::kGenerated});
  m.entries.push_back({"finger_interruption/fake_b_0.png", "defect_free/b", "", DefectClass::kFingerInterruption,
                       data::Provenance::kGenerated});
  m.counts[DefectClass::kCrack] = {4, 1};
  m.counts[DefectClass::kFingerInterruption] = {0, 1};
  const auto back = AugmentationManifest::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  CHECK(back.seed == m.seed);
  CHECK(back.counts.at(DefectClass::kCrack) == ClassCounts{4, 1});

  auto j = m.to_json();
  j["entries"][0]["provenance"] = "real";
  CHECK_THROWS_AS(AugmentationManifest::from_json(j), IoError);
  ScratchDir dir("aug5");
  std::ofstream(dir / "broken.json") << "{ entries: ";
  CHECK_THROWS_AS(AugmentationManifest::read(dir / "broken.json"), IoError);
  CHECK_THROWS_AS(AugmentationManifest::read(dir / "absent.json"), IoError);
}

TEST_CASE("merging keeps real and generated tallies apart") {
  ScratchDir dir("aug6");
  testing::write_synthetic_dataset(dir / "data", 3, 2, 32, 7);
  const auto train = data::load_dataset(dir / "data", data::Split::kTrain, {32});
  const auto before = provenance_counts(train);
  CHECK(before.at(DefectClass::kCrack) == ClassCounts{3, 0});
  CHECK(before.at(DefectClass::kFingerInterruption) == ClassCounts{3, 0});

  GenerateOptions opts;
  opts.count = 2;
  opts.seed = 9;
  const auto m = generate_defective(train.defect_free, negate(), opts, dir / "gen");
  const auto merged = merge_dataset(train, m, dir / "gen", 32);
  CHECK(merged.defect_free.size() == train.defect_free.size());
  CHECK(merged.defective.size() == train.defective.size() + 2);
  const auto after = provenance_counts(merged);
  CHECK(after.at(DefectClass::kCrack) == ClassCounts{3, 2});
  CHECK(after.at(DefectClass::kFingerInterruption) == ClassCounts{3, 0});
  for (const auto& s : merged.defective) {
    if (s.provenance == data::Provenance::kGenerated) {
      CHECK(s.domain == DefectClass::kCrack);
      CHECK(s.pixels.height == 32);
    }
  }
  // merging twice would duplicate ids
  CHECK_THROWS_AS(merge_dataset(merged, m, dir / "gen", 32), DatasetLayoutError);

  const auto test = data::load_dataset(dir / "data", data::Split::kTest, {32});
  CHECK_THROWS_AS(merge_dataset(test, m, dir / "gen", 32), DatasetLayoutError);
  fs::remove(dir / "gen" / m.entries[0].output_path);
  CHECK_THROWS_AS(merge_dataset(train, m, dir / "gen", 32), IoError);
}

TEST_CASE("a manifest inside the training split marks files as generated") {
  ScratchDir dir("aug7");
  testing::write_synthetic_dataset(dir / "data", 2, 1, 32, 8);
  const auto train = data::load_dataset(dir / "data", data::Split::kTrain, {32});
  GenerateOptions opts;
  opts.count = 2;
  generate_defective(train.defect_free, negate(), opts, dir / "data" / "train");
  const auto reloaded = data::load_dataset(dir / "data", data::Split::kTrain, {32});
  CHECK(provenance_counts(reloaded).at(DefectClass::kCrack) == ClassCounts{2, 2});

  generate_defective(train.defect_free, negate(), opts, dir / "data" / "test");
  CHECK_THROWS(data::load_dataset(dir / "data", data::Split::kTest, {32}));
}
