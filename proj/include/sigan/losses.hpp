// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// Loss terms of the strong-identity cycle GAN. Every function returns the
// scalar value and, when asked, the gradient with respect to its inputs.
#pragma once

#include <string>
#include <string_view>

#include "sigan/tensor.hpp"

namespace sigan::losses {

/// lambda1 weights the strong-identity terms, lambda2 the cycle term.
struct LossWeights {
  double lambda1 = 10.0;
  double lambda2 = 5.0;

  void validate() const;
};

enum class AdversarialMode {
  kLog,             ///< -log D(G(a)) for the generator (non-saturating)
  kLogSaturating,   ///< log(1 - D(G(a))) for the generator, as the min-max is written
  kLeastSquares,
};

enum class Reduction { kMean, kSum };

std::string_view adversarial_mode_name(AdversarialMode mode);
AdversarialMode parse_adversarial_mode(std::string_view name);
std::string_view reduction_name(Reduction r);
Reduction parse_reduction(std::string_view name);

struct LossReport {
  double adv_g = 0;
  double adv_f = 0;
  double adv_da = 0;
  double adv_db = 0;
  double cyc = 0;
  double si_g = 0;
  double si_f = 0;
  double total_generators = 0;

  bool all_finite() const;
  /// One-line JSON object with every field.
  std::string to_json() const;
};

/// Numerically stable log(1 + e^x).
double softplus(double x);
double sigmoid(double x);

/// -[mean log s(real) + mean log(1 - s(fake))] for the log form; least squares
/// uses 0.5 * [mean (real - 1)^2 + mean fake^2].
template <typename T>
double discriminator_loss(const Tensor<T>& real_logits, const Tensor<T>& fake_logits,
                          AdversarialMode mode = AdversarialMode::kLog,
                          Tensor<T>* d_real = nullptr, Tensor<T>* d_fake = nullptr);

template <typename T>
double generator_adversarial_loss(const Tensor<T>& fake_logits,
                                  AdversarialMode mode = AdversarialMode::kLog,
                                  Tensor<T>* d_fake = nullptr);

/// L1 distance between two equal-shaped batches. Gradients are w.r.t. each argument.
template <typename T>
double l1_distance(const Tensor<T>& x, const Tensor<T>& y, Reduction reduction,
                   Tensor<T>* dx = nullptr, Tensor<T>* dy = nullptr);

/// |a - F(G(a))| + |b - G(F(b))|.
template <typename T>
double cycle_loss(const Tensor<T>& a, const Tensor<T>& fga, const Tensor<T>& b,
                  const Tensor<T>& gfb, Reduction reduction = Reduction::kMean);

/// Pair one plus pair two. For G the pairs are (a, G(a)) and (F(b), G(F(b)));
/// for F they are (b, F(b)) and (G(a), F(G(a))).
template <typename T>
double strong_identity_loss(const Tensor<T>& x_in, const Tensor<T>& x_out,
                            const Tensor<T>& y_in, const Tensor<T>& y_out,
                            Reduction reduction = Reduction::kMean);

/// adv_g + adv_f + lambda1 * (si_g + si_f) + lambda2 * cyc.
double total_generator_loss(const LossReport& terms, const LossWeights& w);

}  // namespace sigan::losses
