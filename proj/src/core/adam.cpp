// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/nn/adam.hpp"

#include <cmath>

namespace sigan::nn {

template <typename T>
Adam<T>::Adam(ParamList<T> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (auto* p : params_) {
    m_.emplace_back(p->trainable ? p->value.shape() : Shape{});
    v_.emplace_back(p->trainable ? p->value.shape() : Shape{});
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto* p : params_) {
    if (p->trainable) p->grad.zero();
  }
}

template <typename T>
double Adam<T>::clip_grad_norm(double max_norm) {
  double sq = 0;
  for (auto* p : params_) {
    if (!p->trainable) continue;
    for (T g : p->grad.vec()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / (norm + 1e-12));
    for (auto* p : params_) {
      if (!p->trainable) continue;
      for (T& g : p->grad.vec()) g *= scale;
    }
  }
  return norm;
}

template <typename T>
void Adam<T>::step(double lr) {
  ++t_;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto* p = params_[i];
    if (!p->trainable) continue;
    T* w = p->value.data();
    const T* g = p->grad.data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      const double gk = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      w[k] = static_cast<T>(w[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + cfg_.epsilon));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace sigan::nn
