// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// Layer primitives with explicit forward/backward. Layers keep no activation
// state: forward fills a caller-owned cache and backward consumes it, so one
// parameter set can be evaluated several times within one training step.
#pragma once

#include <string>
#include <vector>

#include "sigan/tensor.hpp"

namespace sigan::nn {

enum class Mode { kTrain, kEval };

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  /// Buffers (running statistics) are saved with the weights but never updated by the optimizer.
  bool trainable = true;

  Param() = default;
  Param(std::string n, Shape s, bool train = true)
      : name(std::move(n)), value(s), grad(train ? Tensor<T>(s) : Tensor<T>()), trainable(train) {}
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C, op(A) is MxK, op(B) is KxN.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
          const float* b, float beta, float* c);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          const double* b, double beta, double* c);

struct ConvGeometry {
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;

  int out_h(int h) const { return (h + 2 * ph - kh) / sh + 1; }
  int out_w(int w) const { return (w + 2 * pw - kw) / sw + 1; }
};

template <typename T>
void im2col(const T* image, int channels, int h, int w, const ConvGeometry& g, T* col);
template <typename T>
void col2im(const T* col, int channels, int h, int w, const ConvGeometry& g, T* image);

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels, ConvGeometry geometry,
         bool bias);

  Shape output_shape(const Shape& in) const;
  Tensor<T> forward(const Tensor<T>& x) const;
  /// Returns dL/dx; adds dL/dW into the parameter grads when accumulate is set.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool accumulate);
  void collect(ParamList<T>& out);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  const ConvGeometry& geometry() const { return geom_; }

  Param<T> weight;  // out x in x kh x kw
  Param<T> bias;    // 1 x out x 1 x 1, empty when disabled
  bool has_bias = false;

 private:
  int in_ = 0, out_ = 0;
  ConvGeometry geom_;
};

/// Transposed convolution; weight layout is in x out x kh x kw.
template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(const std::string& name, int in_channels, int out_channels,
                  ConvGeometry geometry, bool bias);

  Shape output_shape(const Shape& in) const;
  Tensor<T> forward(const Tensor<T>& x) const;
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool accumulate);
  void collect(ParamList<T>& out);

  Param<T> weight;
  Param<T> bias;
  bool has_bias = false;

 private:
  int in_ = 0, out_ = 0;
  ConvGeometry geom_;
};

template <typename T>
struct NormCache {
  Tensor<T> x_hat;
  std::vector<T> inv_std;
  Mode mode = Mode::kTrain;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels, T eps = T(1e-5), T momentum = T(0.1));

  /// Training mode normalizes with batch statistics and updates the running estimates.
  Tensor<T> forward(const Tensor<T>& x, Mode mode, NormCache<T>* cache);
  /// Evaluation-mode forward with running statistics; never mutates.
  Tensor<T> infer(const Tensor<T>& x) const;
  Tensor<T> backward(const NormCache<T>& cache, const Tensor<T>& dy, bool accumulate);
  void collect(ParamList<T>& out);

  Param<T> gamma, beta;
  Param<T> running_mean, running_var;

 private:
  int channels_ = 0;
  T eps_ = T(1e-5);
  T momentum_ = T(0.1);
};

/// Per-sample, per-channel normalization without affine parameters.
template <typename T>
class InstanceNorm2d {
 public:
  explicit InstanceNorm2d(T eps = T(1e-5)) : eps_(eps) {}
  Tensor<T> forward(const Tensor<T>& x, NormCache<T>* cache) const;
  Tensor<T> backward(const NormCache<T>& cache, const Tensor<T>& dy) const;

 private:
  T eps_;
};

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& dy, T slope);
template <typename T>
Tensor<T> tanh_forward(const Tensor<T>& x);
/// Takes the forward output y = tanh(x).
template <typename T>
Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& dy);

template <typename T>
Tensor<T> avg_pool(const Tensor<T>& x, const ConvGeometry& g, bool count_include_pad = true);
/// Backward of a non-overlapping k x k average pool (stride k, no padding).
template <typename T>
Tensor<T> avg_pool_backward(const Shape& in, const Tensor<T>& dy, int k);
template <typename T>
Tensor<T> max_pool(const Tensor<T>& x, const ConvGeometry& g);
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor);
template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& dy, int factor);

}  // namespace sigan::nn
