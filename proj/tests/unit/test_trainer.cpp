// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "sigan/train/trainer.hpp"
#include "support/oracles.hpp"
#include "support/scratch.hpp"
#include "support/synthetic.hpp"

using namespace sigan;
using namespace sigan::train;
using sigan::testing::ScratchDir;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.image_size = 32;
  c.generator_widths = {4, 8, 8};
  c.batch_size = 2;
  c.epochs_constant = 1;
  c.epochs_decay = 2;
  c.checkpoint_every = 1;
  c.seed = 17;
  c.offline_augment = false;
  return c;
}

data::DomainCollection tiny_collection(int n_free, int n_crack, int size = 32) {
  data::DomainCollection c;
  for (int i = 0; i < n_free; ++i) {
    c.defect_free.push_back(testing::as_sample("defect_free/f" + std::to_string(i),
                                               testing::cell_background(size, 500 + i),
                                               data::DefectClass::kDefectFree));
  }
  for (int i = 0; i < n_crack; ++i) {
    c.defective.push_back(testing::as_sample("crack/c" + std::to_string(i),
                                             testing::crack_cell(size, 700 + i).image,
                                             data::DefectClass::kCrack));
  }
  c.defective.push_back(testing::as_sample("finger_interruption/x0",
                                           testing::finger_cell(size, 900).image,
                                           data::DefectClass::kFingerInterruption));
  return c;
}

data::BatchPair first_batch(const data::DomainCollection& c, const TrainConfig& cfg) {
  auto [a, b] = training_domains(c, cfg);
  std::vector<const data::ImageSample*> pa, pb;
  for (const auto& s : a) pa.push_back(&s);
  for (const auto& s : b) pb.push_back(&s);
  return data::UnpairedSampler(pa, pb, cfg.batch_size, cfg.seed).batch(0);
}

std::vector<float> flat_params(models::ModelSet<float>& m) {
  std::vector<float> out;
  for (auto list : {m.g->parameters(), m.f->parameters(), m.d_a->parameters(), m.d_b->parameters()}) {
    for (auto* p : list) out.insert(out.end(), p->value.vec().begin(), p->value.vec().end());
  }
  return out;
}

bool same_report(const losses::LossReport& x, const losses::LossReport& y) {
  return x.adv_g == y.adv_g && x.adv_f == y.adv_f && x.adv_da == y.adv_da && x.adv_db == y.adv_db &&
         x.cyc == y.cyc && x.si_g == y.si_g && x.si_f == y.si_f && x.total_generators == y.total_generators;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  TrainConfig cfg;
  CHECK(cfg.total_epochs() == 60);
  CHECK(lr_schedule(0, cfg) == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(lr_schedule(29, cfg) == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(lr_schedule(30, cfg) == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(lr_schedule(45, cfg) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_schedule(60, cfg) == 0.0);
  CHECK_THROWS_AS(lr_schedule(-1, cfg), ConfigError);
  CHECK_THROWS_AS(lr_schedule(61, cfg), ConfigError);
  // base_lr * (total - e) / decay on the decay segment, monotone overall
  double prev = lr_schedule(0, cfg);
  for (int e = 1; e <= 60; ++e) {
    const double v = lr_schedule(e, cfg);
    CHECK(v <= prev);
    if (e >= 30) CHECK(v == doctest::Approx(2e-4 * (60 - e) / 30.0).epsilon(1e-12));
    prev = v;
  }
  // slope of the ramp bounds every step change
  for (int e = 30; e < 60; ++e) CHECK(lr_schedule(e, cfg) - lr_schedule(e + 1, cfg) <= 2e-4 / 30 + 1e-15);
}

TEST_CASE("adam matches the textbook update") {
  nn::Param<double> w("w", {1, 1, 1, 3});
  w.value.vec() = {0.5, -1.0, 2.0};
  nn::Param<double> buf("buf", {1, 1, 1, 1}, false);
  nn::AdamConfig cfg{0.5, 0.999, 1e-8};
  nn::Adam<double> opt({&w, &buf}, cfg);
  std::vector<double> ref = w.value.vec(), m(3, 0.0), v(3, 0.0);
  const double grads[3][3] = {{0.1, -0.2, 0.3}, {-0.5, 0.0, 0.25}, {1.0, 1.0, -1.0}};
  for (int t = 1; t <= 3; ++t) {
    w.grad.vec().assign(grads[t - 1], grads[t - 1] + 3);
    opt.step(0.01);
    for (int k = 0; k < 3; ++k) {
      const double g = grads[t - 1][k];
      m[k] = 0.5 * m[k] + 0.5 * g;
      v[k] = 0.999 * v[k] + 0.001 * g * g;
      const double mh = m[k] / (1 - std::pow(0.5, t)), vh = v[k] / (1 - std::pow(0.999, t));
      ref[k] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(w.value.vec()[k] == doctest::Approx(ref[k]).epsilon(1e-14));
    }
  }
  CHECK(opt.steps() == 3);
  CHECK(buf.value.vec()[0] == 0.0);
  w.grad.vec() = {3.0, 4.0, 0.0};
  CHECK(opt.clip_grad_norm(1.0) == doctest::Approx(5.0));
  CHECK(w.grad.vec()[0] == doctest::Approx(0.6));
  CHECK(w.grad.vec()[1] == doctest::Approx(0.8));
}

TEST_CASE("a training step is bitwise reproducible") {
  const auto cfg = tiny_config();
  const auto coll = tiny_collection(4, 4);
  const auto batch = first_batch(coll, cfg);
  auto s1 = make_train_state(cfg);
  auto s2 = make_train_state(cfg);
  for (int k = 0; k < 2; ++k) {
    const auto r1 = train_step(s1, batch, 2e-4);
    const auto r2 = train_step(s2, batch, 2e-4);
    CHECK(same_report(r1, r2));
    CHECK(r1.all_finite());
    CHECK(r1.total_generators == doctest::Approx(r1.adv_g + r1.adv_f + 10 * (r1.si_g + r1.si_f) + 5 * r1.cyc));
  }
  CHECK(flat_params(s1.models) == flat_params(s2.models));
  CHECK(s1.step == 2);
  CHECK(s1.opt_gen.steps() == 2);
  CHECK(s1.opt_disc.steps() == 2);
}

TEST_CASE("zero loss weights drop the identity and cycle terms") {
  auto cfg = tiny_config();
  cfg.loss_weights = {0.0, 0.0};
  const auto coll = tiny_collection(4, 4);
  const auto batch = first_batch(coll, cfg);
  auto s = make_train_state(cfg);
  const auto r = train_step(s, batch, 2e-4);
  CHECK(r.si_g == 0.0);
  CHECK(r.si_f == 0.0);
  CHECK(r.cyc == 0.0);
  CHECK(r.total_generators == doctest::Approx(r.adv_g + r.adv_f).epsilon(1e-12));

  // the generator update equals one driven by the adversarial terms alone
  auto ref = make_train_state(tiny_config());
  ref.opt_gen.zero_grad();
  ObjectiveOptions adv_only;
  adv_only.weights = {1, 1, 0, 0, 0};
  generator_objective(ref.models, batch.batch_a, batch.batch_b, adv_only);
  ref.opt_gen.step(2e-4);
  const auto pg = s.models.g->parameters(), rg = ref.models.g->parameters();
  for (std::size_t i = 0; i < pg.size(); ++i) {
    if (pg[i]->trainable) CHECK(pg[i]->value.vec() == rg[i]->value.vec());
  }
}

TEST_CASE("non-finite losses abort with the batch ids") {
  const auto cfg = tiny_config();
  const auto coll = tiny_collection(4, 4);
  const auto batch = first_batch(coll, cfg);
  auto s = make_train_state(cfg);
  s.models.g->parameters()[0]->value[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train_step(s, batch, 2e-4);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(batch.ids_a[0]) != std::string::npos);
    CHECK(msg.find(batch.ids_b[0]) != std::string::npos);
  }
  // an absurd learning rate that overflows the weights is caught too
  auto t = make_train_state(cfg);
  CHECK_THROWS_AS(
      [&] {
        for (int k = 0; k < 10; ++k) train_step(t, batch, 1e38);
      }(),
      NumericError);
}

TEST_CASE("discriminators-first order and gradient clipping run") {
  auto cfg = tiny_config();
  cfg.update_order = UpdateOrder::kDiscriminatorsFirst;
  cfg.grad_clip = 0.5;
  cfg.adversarial_mode = losses::AdversarialMode::kLeastSquares;
  const auto coll = tiny_collection(4, 4);
  auto s = make_train_state(cfg);
  const auto r = train_step(s, first_batch(coll, cfg), 2e-4);
  CHECK(r.all_finite());
  CHECK(r.adv_da > 0.0);
}

TEST_CASE("image pool") {
  std::mt19937_64 rng(3);
  ImagePool off(0);
  const auto x = testing::random_tensor<float>({3, 1, 4, 4}, rng);
  CHECK(off.query(x, rng).vec() == x.vec());
  CHECK(off.images().empty());

  ImagePool pool(4);
  std::vector<Tensor<float>> seen;
  int swapped = 0, total = 0;
  for (int k = 0; k < 50; ++k) {
    const auto batch = testing::random_tensor<float>({2, 1, 4, 4}, rng);
    const auto out = pool.query(batch, rng);
    CHECK(static_cast<int>(pool.images().size()) <= 4);
    for (int n = 0; n < 2; ++n) {
      const std::vector<float> got(out.sample(n), out.sample(n) + 16);
      const std::vector<float> mine(batch.sample(n), batch.sample(n) + 16);
      bool known = got == mine;
      for (const auto& s : seen) known = known || s.vec() == got;
      CHECK(known);
      if (got != mine) ++swapped;
      ++total;
      seen.push_back(Tensor<float>({1, 1, 4, 4}, mine));
    }
    if (k < 2) CHECK(out.vec() == batch.vec());
  }
  // about half of the post-warm-up queries swap
  CHECK(swapped > 25);
  CHECK(swapped < 70);
}

TEST_CASE("training domains pick the configured class and augment") {
  auto cfg = tiny_config();
  const auto coll = tiny_collection(3, 5);
  auto [a, b] = training_domains(coll, cfg);
  CHECK(a.size() == 3);
  CHECK(b.size() == 5);
  cfg.offline_augment = true;
  CHECK(training_domains(coll, cfg).second.size() == 20);
  cfg.defect_class = data::DefectClass::kFingerInterruption;
  CHECK(training_domains(coll, cfg).second.size() == 4);
  cfg.image_size = 64;
  CHECK_THROWS_AS(training_domains(coll, cfg), ConfigError);
}

TEST_CASE("full runs write checkpoints and logs, and resume exactly") {
  const auto cfg = tiny_config();
  const auto coll = tiny_collection(4, 2);
  ScratchDir straight("straight"), split("split");

  const auto full = train::train(cfg, coll, straight.path());
  CHECK(full.epochs_completed == 3);
  CHECK(full.steps == 6);
  CHECK(full.checkpoints.size() == 3);
  CHECK(latest_checkpoint(straight.path()) == straight.path() / "checkpoints/epoch_0003");
  std::ifstream log(full.log_file);
  std::string line;
  int lines = 0;
  std::set<double> lrs;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"epoch", "step", "lr", "adv_g", "adv_f", "adv_da", "adv_db", "cyc", "si_g",
                          "si_f", "total_generators"}) {
      CHECK(j.contains(k));
    }
    CHECK(j["step"].get<int>() == lines);
    lrs.insert(j["lr"].get<double>());
    ++lines;
  }
  CHECK(lines == 6);
  CHECK(lrs == std::set<double>{lr_schedule(0, cfg), lr_schedule(1, cfg), lr_schedule(2, cfg)});

  // interrupted after 3 steps: epoch 1 checkpoint survives, resume finishes the run
  TrainOptions stop;
  stop.max_steps = 3;
  const auto part = train::train(cfg, coll, split.path(), stop);
  CHECK(part.epochs_completed == 1);
  CHECK(latest_checkpoint(split.path()) == split.path() / "checkpoints/epoch_0001");
  TrainOptions resume;
  resume.resume = true;
  const auto rest = train::train(cfg, coll, split.path(), resume);
  CHECK(rest.epochs_completed == 3);
  CHECK(rest.steps == 6);
  REQUIRE(rest.history.size() == full.history.size());
  for (std::size_t i = 0; i < full.history.size(); ++i) {
    CHECK(rest.history[i].lr == full.history[i].lr);
    CHECK(same_report(rest.history[i].losses, full.history[i].losses));
  }
  auto a = load_train_state(straight.path() / "checkpoints/epoch_0003");
  auto b = load_train_state(split.path() / "checkpoints/epoch_0003");
  CHECK(flat_params(a.models) == flat_params(b.models));

  auto other = cfg;
  other.loss_weights.lambda1 = 3;
  CHECK_THROWS_AS(train::train(other, coll, split.path(), resume), ConfigError);
}

TEST_CASE("the sampled batch sequence is reproducible under a fixed seed") {
  const auto cfg = tiny_config();
  const auto coll = tiny_collection(6, 4);
  auto ids = [&] {
    auto [a, b] = training_domains(coll, cfg);
    std::vector<const data::ImageSample*> pa, pb;
    for (const auto& s : a) pa.push_back(&s);
    for (const auto& s : b) pb.push_back(&s);
    data::UnpairedSampler sampler(pa, pb, cfg.batch_size, cfg.seed);
    std::vector<std::string> out;
    for (int k = 0; k < 12; ++k) {
      const auto [x, y] = sampler.batch_ids(k);
      out.insert(out.end(), x.begin(), x.end());
      out.insert(out.end(), y.begin(), y.end());
    }
    return out;
  };
  CHECK(ids() == ids());
}
