// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/models/nonlocal.hpp"

#include <algorithm>
#include <cmath>

namespace sigan::models {

using nn::gemm;

template <typename T>
Tensor<T> attention_forward(const Tensor<T>& f, AttentionCache<T>* cache) {
  const Shape& s = f.shape();
  const int c = s.c;
  const int n_pos = s.h * s.w;
  const std::size_t block = static_cast<std::size_t>(n_pos) * n_pos;
  Tensor<T> z(s);
  std::vector<T> attention(block * s.n);
  for (int b = 0; b < s.n; ++b) {
    const T* x = f.sample(b);  // C x N
    T* a = attention.data() + b * block;
    gemm(true, false, n_pos, n_pos, c, T(1), x, x, T(0), a);
    for (int i = 0; i < n_pos; ++i) {
      T* row = a + static_cast<std::size_t>(i) * n_pos;
      const T mx = *std::max_element(row, row + n_pos);
      T sum = 0;
      for (int j = 0; j < n_pos; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (int j = 0; j < n_pos; ++j) row[j] /= sum;
    }
    // z^T (C x N) = x * A^T
    gemm(false, true, c, n_pos, n_pos, T(1), x, a, T(0), z.sample(b));
  }
  if (cache) {
    cache->input = f;
    cache->attention = std::move(attention);
    cache->positions = n_pos;
  }
  return z;
}

template <typename T>
Tensor<T> attention_backward(const AttentionCache<T>& cache, const Tensor<T>& dz) {
  const Shape& s = cache.input.shape();
  const int c = s.c;
  const int n_pos = cache.positions;
  const std::size_t block = static_cast<std::size_t>(n_pos) * n_pos;
  Tensor<T> dx(s);
  std::vector<T> da(block);
  for (int b = 0; b < s.n; ++b) {
    const T* x = cache.input.sample(b);
    const T* a = cache.attention.data() + b * block;
    const T* g = dz.sample(b);
    T* d = dx.sample(b);
    // Through the value path: dX = dZ^T * A.
    gemm(false, false, c, n_pos, n_pos, T(1), g, a, T(0), d);
    // dA = dZ * X^T in N x N layout.
    gemm(true, false, n_pos, n_pos, c, T(1), g, x, T(0), da.data());
    for (int i = 0; i < n_pos; ++i) {
      const T* arow = a + static_cast<std::size_t>(i) * n_pos;
      T* drow = da.data() + static_cast<std::size_t>(i) * n_pos;
      T dot = 0;
      for (int j = 0; j < n_pos; ++j) dot += arow[j] * drow[j];
      for (int j = 0; j < n_pos; ++j) drow[j] = arow[j] * (drow[j] - dot);
    }
    // S = X^T X, so dX += X (dS + dS^T).
    for (int i = 0; i < n_pos; ++i) {
      for (int j = i + 1; j < n_pos; ++j) {
        const T sym = da[static_cast<std::size_t>(i) * n_pos + j] +
                      da[static_cast<std::size_t>(j) * n_pos + i];
        da[static_cast<std::size_t>(i) * n_pos + j] = sym;
        da[static_cast<std::size_t>(j) * n_pos + i] = sym;
      }
      da[static_cast<std::size_t>(i) * n_pos + i] *= T(2);
    }
    gemm(false, false, c, n_pos, n_pos, T(1), x, da.data(), T(1), d);
  }
  return dx;
}

template <typename T>
Tensor<T> nonlocal_forward(const Tensor<T>& f, int max_positions, AttentionCache<T>* cache) {
  const Shape& s = f.shape();
  if (s.h * s.w > max_positions) {
    throw ShapeError("non-local block: " + std::to_string(s.h * s.w) +
                     " spatial positions exceed the attention budget of " +
                     std::to_string(max_positions) +
                     "; place the block at a coarser resolution or enable pooling");
  }
  Tensor<T> o = attention_forward(f, cache);
  add_inplace(o, f);
  return o;
}

template <typename T>
NonLocalBlock<T>::NonLocalBlock(const std::string& name, int channels, int height, int width,
                                const NonLocalConfig& cfg) {
  if (cfg.max_positions < 1) throw ConfigError("non-local max_positions must be positive");
  while (static_cast<long>(height / reduction_) * (width / reduction_) > cfg.max_positions) {
    reduction_ *= 2;
    if (height % reduction_ != 0 || width % reduction_ != 0) {
      throw ConfigError("non-local block: " + std::to_string(height) + "x" +
                        std::to_string(width) + " feature cannot be pooled to fit " +
                        std::to_string(cfg.max_positions) + " positions");
    }
  }
  use_projection_ = cfg.projection || reduction_ > 1;
  if (use_projection_) {
    projection = nn::Conv2d<T>(name + ".proj", channels, channels, nn::ConvGeometry{}, false);
  }
}

template <typename T>
Tensor<T> NonLocalBlock<T>::forward(const Tensor<T>& f, Cache* cache) const {
  Tensor<T> g = reduction_ > 1
                    ? nn::avg_pool(f, nn::ConvGeometry{reduction_, reduction_, reduction_,
                                                       reduction_, 0, 0})
                    : f;
  Tensor<T> q = use_projection_ ? projection.forward(g) : g;
  Tensor<T> z = attention_forward(q, cache ? &cache->attention : nullptr);
  if (reduction_ > 1) z = nn::upsample_nearest(z, reduction_);
  add_inplace(z, f);
  if (cache) {
    cache->input = f.shape();
    if (use_projection_) cache->pooled = std::move(g);
  }
  return z;
}

template <typename T>
Tensor<T> NonLocalBlock<T>::backward(const Cache& cache, const Tensor<T>& dout,
                                     bool accumulate) {
  Tensor<T> dz = reduction_ > 1 ? nn::upsample_nearest_backward(dout, reduction_) : dout;
  Tensor<T> dq = attention_backward(cache.attention, dz);
  Tensor<T> dg = use_projection_ ? projection.backward(cache.pooled, dq, accumulate) : dq;
  Tensor<T> df = reduction_ > 1 ? nn::avg_pool_backward(cache.input, dg, reduction_) : dg;
  add_inplace(df, dout);
  return df;
}

template <typename T>
void NonLocalBlock<T>::collect(nn::ParamList<T>& out) {
  if (use_projection_) projection.collect(out);
}

#define SIGAN_INSTANTIATE_NONLOCAL(T)                                                  \
  template Tensor<T> attention_forward<T>(const Tensor<T>&, AttentionCache<T>*);       \
  template Tensor<T> attention_backward<T>(const AttentionCache<T>&, const Tensor<T>&); \
  template Tensor<T> nonlocal_forward<T>(const Tensor<T>&, int, AttentionCache<T>*);   \
  template class NonLocalBlock<T>;

SIGAN_INSTANTIATE_NONLOCAL(float)
SIGAN_INSTANTIATE_NONLOCAL(double)

}  // namespace sigan::models
