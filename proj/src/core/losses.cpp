// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/losses.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace sigan::losses {

void LossWeights::validate() const {
  if (!(lambda1 >= 0) || !(lambda2 >= 0)) {
    throw ConfigError("loss weights must be nonnegative (lambda1=" + std::to_string(lambda1) +
                      ", lambda2=" + std::to_string(lambda2) + ")");
  }
}

std::string_view adversarial_mode_name(AdversarialMode mode) {
  switch (mode) {
    case AdversarialMode::kLog: return "log";
    case AdversarialMode::kLogSaturating: return "log_saturating";
    case AdversarialMode::kLeastSquares: return "least_squares";
  }
  return "log";
}

AdversarialMode parse_adversarial_mode(std::string_view name) {
  if (name == "log") return AdversarialMode::kLog;
  if (name == "log_saturating") return AdversarialMode::kLogSaturating;
  if (name == "least_squares") return AdversarialMode::kLeastSquares;
  throw ConfigError("unknown adversarial mode '" + std::string(name) +
                    "' (log|log_saturating|least_squares)");
}

std::string_view reduction_name(Reduction r) { return r == Reduction::kMean ? "mean" : "sum"; }

Reduction parse_reduction(std::string_view name) {
  if (name == "mean") return Reduction::kMean;
  if (name == "sum") return Reduction::kSum;
  throw ConfigError("unknown L1 reduction '" + std::string(name) + "' (mean|sum)");
}

bool LossReport::all_finite() const {
  for (double v : {adv_g, adv_f, adv_da, adv_db, cyc, si_g, si_f, total_generators}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string LossReport::to_json() const {
  nlohmann::ordered_json j;
  j["adv_g"] = adv_g;
  j["adv_f"] = adv_f;
  j["adv_da"] = adv_da;
  j["adv_db"] = adv_db;
  j["cyc"] = cyc;
  j["si_g"] = si_g;
  j["si_f"] = si_f;
  j["total_generators"] = total_generators;
  return j.dump();
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

template <typename T>
void require_finite(const Tensor<T>& t, const char* what) {
  if (t.empty()) throw ShapeError(std::string(what) + ": empty tensor");
  if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite values");
}

template <typename T>
void prepare_grad(Tensor<T>* g, const Shape& s) {
  if (g) *g = Tensor<T>(s);
}

}  // namespace

template <typename T>
double discriminator_loss(const Tensor<T>& real_logits, const Tensor<T>& fake_logits,
                          AdversarialMode mode, Tensor<T>* d_real, Tensor<T>* d_fake) {
  if (real_logits.shape() != fake_logits.shape()) {
    throw ShapeError("discriminator loss: real logits " + real_logits.shape().str() +
                     " vs fake logits " + fake_logits.shape().str());
  }
  require_finite(real_logits, "discriminator loss");
  require_finite(fake_logits, "discriminator loss");
  prepare_grad(d_real, real_logits.shape());
  prepare_grad(d_fake, fake_logits.shape());
  const double nr = static_cast<double>(real_logits.size());
  const double nf = static_cast<double>(fake_logits.size());
  double real_term = 0, fake_term = 0;
  if (mode == AdversarialMode::kLeastSquares) {
    for (std::size_t i = 0; i < real_logits.size(); ++i) {
      const double r = real_logits[i] - 1.0;
      real_term += r * r;
      if (d_real) (*d_real)[i] = static_cast<T>(r / nr);
    }
    for (std::size_t i = 0; i < fake_logits.size(); ++i) {
      const double f = fake_logits[i];
      fake_term += f * f;
      if (d_fake) (*d_fake)[i] = static_cast<T>(f / nf);
    }
    return 0.5 * (real_term / nr + fake_term / nf);
  }
  // -log s(x) = softplus(-x), -log(1 - s(x)) = softplus(x)
  for (std::size_t i = 0; i < real_logits.size(); ++i) {
    const double x = real_logits[i];
    real_term += softplus(-x);
    if (d_real) (*d_real)[i] = static_cast<T>((sigmoid(x) - 1.0) / nr);
  }
  for (std::size_t i = 0; i < fake_logits.size(); ++i) {
    const double x = fake_logits[i];
    fake_term += softplus(x);
    if (d_fake) (*d_fake)[i] = static_cast<T>(sigmoid(x) / nf);
  }
  return real_term / nr + fake_term / nf;
}

template <typename T>
double generator_adversarial_loss(const Tensor<T>& fake_logits, AdversarialMode mode,
                                  Tensor<T>* d_fake) {
  require_finite(fake_logits, "generator adversarial loss");
  prepare_grad(d_fake, fake_logits.shape());
  const double n = static_cast<double>(fake_logits.size());
  double acc = 0;
  for (std::size_t i = 0; i < fake_logits.size(); ++i) {
    const double x = fake_logits[i];
    double grad = 0;
    switch (mode) {
      case AdversarialMode::kLog:
        acc += softplus(-x);
        grad = sigmoid(x) - 1.0;
        break;
      case AdversarialMode::kLogSaturating:
        acc -= softplus(x);
        grad = -sigmoid(x);
        break;
      case AdversarialMode::kLeastSquares:
        acc += (x - 1.0) * (x - 1.0);
        grad = 2.0 * (x - 1.0);
        break;
    }
    if (d_fake) (*d_fake)[i] = static_cast<T>(grad / n);
  }
  return acc / n;
}

template <typename T>
double l1_distance(const Tensor<T>& x, const Tensor<T>& y, Reduction reduction, Tensor<T>* dx,
                   Tensor<T>* dy) {
  if (x.shape() != y.shape()) {
    throw ShapeError("L1 distance: " + x.shape().str() + " vs " + y.shape().str());
  }
  prepare_grad(dx, x.shape());
  prepare_grad(dy, y.shape());
  const double scale = reduction == Reduction::kMean ? 1.0 / static_cast<double>(x.size()) : 1.0;
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    acc += std::abs(d);
    const double sign = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
    if (dx) (*dx)[i] = static_cast<T>(sign * scale);
    if (dy) (*dy)[i] = static_cast<T>(-sign * scale);
  }
  return acc * scale;
}

template <typename T>
double cycle_loss(const Tensor<T>& a, const Tensor<T>& fga, const Tensor<T>& b,
                  const Tensor<T>& gfb, Reduction reduction) {
  return l1_distance(a, fga, reduction) + l1_distance(b, gfb, reduction);
}

template <typename T>
double strong_identity_loss(const Tensor<T>& x_in, const Tensor<T>& x_out,
                            const Tensor<T>& y_in, const Tensor<T>& y_out,
                            Reduction reduction) {
  return l1_distance(x_in, x_out, reduction) + l1_distance(y_in, y_out, reduction);
}

double total_generator_loss(const LossReport& terms, const LossWeights& w) {
  w.validate();
  return terms.adv_g + terms.adv_f + w.lambda1 * terms.si_g + w.lambda1 * terms.si_f +
         w.lambda2 * terms.cyc;
}

#define SIGAN_INSTANTIATE_LOSSES(T)                                                         \
  template double discriminator_loss<T>(const Tensor<T>&, const Tensor<T>&, AdversarialMode, \
                                        Tensor<T>*, Tensor<T>*);                             \
  template double generator_adversarial_loss<T>(const Tensor<T>&, AdversarialMode,           \
                                                Tensor<T>*);                                 \
  template double l1_distance<T>(const Tensor<T>&, const Tensor<T>&, Reduction, Tensor<T>*,  \
                                 Tensor<T>*);                                                \
  template double cycle_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                const Tensor<T>&, Reduction);                                \
  template double strong_identity_loss<T>(const Tensor<T>&, const Tensor<T>&,                \
                                          const Tensor<T>&, const Tensor<T>&, Reduction);

SIGAN_INSTANTIATE_LOSSES(float)
SIGAN_INSTANTIATE_LOSSES(double)

}  // namespace sigan::losses
