// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#pragma once

#include <vector>

#include "sigan/nn/layers.hpp"

namespace sigan::models {

/// Largest number of spatial positions N = H*W attended over directly.
inline constexpr int kDefaultAttentionBudget = 4096;

struct NonLocalConfig {
  bool enabled = true;
  int max_positions = kDefaultAttentionBudget;
  /// Learned 1x1 projection ahead of the attention. Always on when the block
  /// has to pool down to fit the budget.
  bool projection = false;
};

template <typename T>
struct AttentionCache {
  Tensor<T> input;
  /// Row-stochastic attention, one N x N block per sample.
  std::vector<T> attention;
  int positions = 0;
};

/// Attention term softmax(f f^T) f for each sample, laid back out as B x C x H x W.
template <typename T>
Tensor<T> attention_forward(const Tensor<T>& f, AttentionCache<T>* cache);
template <typename T>
Tensor<T> attention_backward(const AttentionCache<T>& cache, const Tensor<T>& dz);

/// o = softmax(f f^T) f + f, with f flattened to N = H*W rows of C-dim vectors.
/// Throws ShapeError when N exceeds `max_positions`.
template <typename T>
Tensor<T> nonlocal_forward(const Tensor<T>& f, int max_positions = kDefaultAttentionBudget,
                           AttentionCache<T>* cache = nullptr);

/// Non-local block as placed in the generator. Feature maps larger than the
/// attention budget are average-pooled by a power of two, projected by a 1x1
/// conv, attended, then upsampled (nearest) and added back onto the input.
template <typename T>
class NonLocalBlock {
 public:
  struct Cache {
    Shape input;
    Tensor<T> pooled;
    AttentionCache<T> attention;
  };

  NonLocalBlock() = default;
  NonLocalBlock(const std::string& name, int channels, int height, int width,
                const NonLocalConfig& cfg);

  int reduction() const { return reduction_; }
  bool has_projection() const { return use_projection_; }

  Tensor<T> forward(const Tensor<T>& f, Cache* cache) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dout, bool accumulate);
  void collect(nn::ParamList<T>& out);

  nn::Conv2d<T> projection;

 private:
  int reduction_ = 1;
  bool use_projection_ = false;
};

}  // namespace sigan::models
