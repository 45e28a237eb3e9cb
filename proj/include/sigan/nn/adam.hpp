// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#pragma once

#include <cstdint>
#include <vector>

#include "sigan/nn/layers.hpp"

namespace sigan::nn {

struct AdamConfig {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive moment estimation over a fixed parameter list. Buffers
/// (non-trainable params) are skipped but keep their slot so moment indices
/// line up with the list.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamList<T> params, AdamConfig cfg);

  void zero_grad();
  void step(double lr);
  /// Scales all gradients so their joint L2 norm is at most `max_norm`. Returns the pre-clip norm.
  double clip_grad_norm(double max_norm);

  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  const ParamList<T>& params() const { return params_; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }

 private:
  ParamList<T> params_;
  AdamConfig cfg_;
  std::vector<Tensor<T>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace sigan::nn
