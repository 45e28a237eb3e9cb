// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include <string>

#include "doctest.h"
#include "support/toy_models.hpp"

using namespace sigan;
using namespace sigan::testing;

namespace {
constexpr double kMaxRelative = 1e-4;
}

TEST_CASE("each generator loss term has exact gradients on the toy networks") {
  for (const auto& setup : {toy_2x2(), toy_4x4()}) {
    for (const char* term : generator_terms()) {
      const auto r = check_generator_objective(setup, only(term), 21);
      INFO(setup.label, " ", std::string(term), ": ", r.worst);
      CHECK(r.checked > 0);
      CHECK(r.max_rel <= kMaxRelative);
    }
  }
}

TEST_CASE("the full weighted objective has exact gradients in every adversarial mode") {
  for (auto mode : {losses::AdversarialMode::kLog, losses::AdversarialMode::kLogSaturating,
                    losses::AdversarialMode::kLeastSquares}) {
    for (auto red : {losses::Reduction::kMean, losses::Reduction::kSum}) {
      train::ObjectiveOptions opt;
      opt.adversarial_mode = mode;
      opt.reduction = red;
      const auto r = check_generator_objective(toy_4x4(), opt, 22);
      INFO(losses::adversarial_mode_name(mode), " ", losses::reduction_name(red), ": ", r.worst);
      CHECK(r.max_rel <= kMaxRelative);
    }
  }
}

TEST_CASE("instance normalization variant") {
  // the bias ahead of an instance norm has an identically zero gradient, so
  // the comparison needs an absolute floor above finite-difference noise
  auto setup = toy_4x4();
  setup.gen.norm = models::NormKind::kInstance;
  for (const char* term : generator_terms()) {
    const auto r = check_generator_objective(setup, only(term), 28, 1e-5);
    INFO(std::string(term), ": ", r.worst);
    CHECK(r.max_rel <= kMaxRelative);
  }
}

TEST_CASE("discriminator objective gradients") {
  for (const auto& setup : {toy_2x2(), toy_4x4()}) {
    for (auto mode : {losses::AdversarialMode::kLog, losses::AdversarialMode::kLeastSquares}) {
      const auto r = check_discriminator_objective(setup, mode, 23);
      INFO(setup.label, ": ", r.worst);
      CHECK(r.checked > 0);
      CHECK(r.max_rel <= kMaxRelative);
    }
  }
}

TEST_CASE("generator objective leaves discriminator gradients alone") {
  const auto setup = toy_4x4();
  auto m = models::init_params<double>(setup.gen, setup.disc, 24);
  const auto batch = toy_batch(setup, 25);
  zero_grads(trainable(m.d_a->parameters()));
  zero_grads(trainable(m.d_b->parameters()));
  train::generator_objective(m, batch.a, batch.b, train::ObjectiveOptions{});
  for (auto* d : {m.d_a.get(), m.d_b.get()}) {
    for (auto* p : trainable(d->parameters())) {
      for (double v : p->grad.vec()) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("disabled terms are reported as exactly zero") {
  const auto setup = toy_2x2();
  auto m = models::init_params<double>(setup.gen, setup.disc, 26);
  const auto batch = toy_batch(setup, 27);
  train::ObjectiveOptions opt;
  opt.weights.si_g = opt.weights.si_f = opt.weights.cyc = 0;
  train::Translations<double> tr;
  const auto r = train::generator_objective(m, batch.a, batch.b, opt, &tr);
  CHECK(r.si_g == 0.0);
  CHECK(r.si_f == 0.0);
  CHECK(r.cyc == 0.0);
  CHECK(r.total_generators == doctest::Approx(r.adv_g + r.adv_f).epsilon(1e-15));
  CHECK(tr.rec_a.empty());
  CHECK(tr.rec_b.empty());
  CHECK(tr.fake_b.shape() == batch.a.shape());
}
