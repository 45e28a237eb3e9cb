// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/nn/layers.hpp"

#include <cblas.h>

#include <cmath>
#include <limits>

namespace sigan::nn {

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
          const float* b, float beta, float* c) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, trans_a ? m : k, b,
              trans_b ? k : n, beta, c, n);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          const double* b, double beta, double* c) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, trans_a ? m : k, b,
              trans_b ? k : n, beta, c, n);
}

template <typename T>
void im2col(const T* image, int channels, int h, int w, const ConvGeometry& g, T* col) {
  const int oh = g.out_h(h);
  const int ow = g.out_w(w);
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        T* row = col + ((static_cast<std::size_t>(c) * g.kh + i) * g.kw + j) * oh * ow;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * g.sh - g.ph + i;
          T* out = row + static_cast<std::size_t>(y) * ow;
          if (iy < 0 || iy >= h) {
            std::fill(out, out + ow, T(0));
            continue;
          }
          const T* src = image + (static_cast<std::size_t>(c) * h + iy) * w;
          for (int x = 0; x < ow; ++x) {
            const int ix = x * g.sw - g.pw + j;
            out[x] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int channels, int h, int w, const ConvGeometry& g, T* image) {
  const int oh = g.out_h(h);
  const int ow = g.out_w(w);
  std::fill(image, image + static_cast<std::size_t>(channels) * h * w, T(0));
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        const T* row = col + ((static_cast<std::size_t>(c) * g.kh + i) * g.kw + j) * oh * ow;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * g.sh - g.ph + i;
          if (iy < 0 || iy >= h) continue;
          T* dst = image + (static_cast<std::size_t>(c) * h + iy) * w;
          const T* src = row + static_cast<std::size_t>(y) * ow;
          for (int x = 0; x < ow; ++x) {
            const int ix = x * g.sw - g.pw + j;
            if (ix >= 0 && ix < w) dst[ix] += src[x];
          }
        }
      }
    }
  }
}

namespace {

bool is_pointwise(const ConvGeometry& g) {
  return g.kh == 1 && g.kw == 1 && g.sh == 1 && g.sw == 1 && g.ph == 0 && g.pw == 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, int in_channels, int out_channels,
                  ConvGeometry geometry, bool bias_enabled)
    : weight(name + ".weight", {out_channels, in_channels, geometry.kh, geometry.kw}),
      has_bias(bias_enabled),
      in_(in_channels),
      out_(out_channels),
      geom_(geometry) {
  if (has_bias) bias = Param<T>(name + ".bias", {1, out_channels, 1, 1});
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
  return {in.n, out_, geom_.out_h(in.h), geom_.out_w(in.w)};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
  const Shape& s = x.shape();
  if (s.c != in_) {
    throw ShapeError("conv " + weight.name + ": expected " + std::to_string(in_) +
                     " input channels, got " + std::to_string(s.c));
  }
  const Shape os = output_shape(s);
  if (os.h <= 0 || os.w <= 0) {
    throw ShapeError("conv " + weight.name + ": input " + s.str() + " too small for kernel");
  }
  Tensor<T> y(os);
  const int kdim = in_ * geom_.kh * geom_.kw;
  const int spatial = os.h * os.w;
  const bool pointwise = is_pointwise(geom_);
  std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(kdim) * spatial);
  for (int n = 0; n < s.n; ++n) {
    const T* cols = x.sample(n);
    if (!pointwise) {
      im2col(x.sample(n), in_, s.h, s.w, geom_, col.data());
      cols = col.data();
    }
    gemm(false, false, out_, spatial, kdim, T(1), weight.value.data(), cols, T(0), y.sample(n));
    if (has_bias) {
      for (int c = 0; c < out_; ++c) {
        T* plane = y.sample(n) + static_cast<std::size_t>(c) * spatial;
        const T b = bias.value[c];
        for (int i = 0; i < spatial; ++i) plane[i] += b;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& x, const Tensor<T>& dy, bool accumulate) {
  const Shape& s = x.shape();
  const Shape& os = dy.shape();
  Tensor<T> dx(s);
  const int kdim = in_ * geom_.kh * geom_.kw;
  const int spatial = os.h * os.w;
  const bool pointwise = is_pointwise(geom_);
  std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(kdim) * spatial);
  std::vector<T> dcol(pointwise ? 0 : static_cast<std::size_t>(kdim) * spatial);
  for (int n = 0; n < s.n; ++n) {
    const T* g = dy.sample(n);
    if (accumulate) {
      const T* cols = x.sample(n);
      if (!pointwise) {
        im2col(x.sample(n), in_, s.h, s.w, geom_, col.data());
        cols = col.data();
      }
      gemm(false, true, out_, kdim, spatial, T(1), g, cols, T(1), weight.grad.data());
      if (has_bias) {
        for (int c = 0; c < out_; ++c) {
          const T* plane = g + static_cast<std::size_t>(c) * spatial;
          T acc = 0;
          for (int i = 0; i < spatial; ++i) acc += plane[i];
          bias.grad[c] += acc;
        }
      }
    }
    if (pointwise) {
      gemm(true, false, kdim, spatial, out_, T(1), weight.value.data(), g, T(0), dx.sample(n));
    } else {
      gemm(true, false, kdim, spatial, out_, T(1), weight.value.data(), g, T(0), dcol.data());
      col2im(dcol.data(), in_, s.h, s.w, geom_, dx.sample(n));
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect(ParamList<T>& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(const std::string& name, int in_channels, int out_channels,
                                    ConvGeometry geometry, bool bias_enabled)
    : weight(name + ".weight", {in_channels, out_channels, geometry.kh, geometry.kw}),
      has_bias(bias_enabled),
      in_(in_channels),
      out_(out_channels),
      geom_(geometry) {
  if (has_bias) bias = Param<T>(name + ".bias", {1, out_channels, 1, 1});
}

template <typename T>
Shape ConvTranspose2d<T>::output_shape(const Shape& in) const {
  return {in.n, out_, (in.h - 1) * geom_.sh - 2 * geom_.ph + geom_.kh,
          (in.w - 1) * geom_.sw - 2 * geom_.pw + geom_.kw};
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x) const {
  const Shape& s = x.shape();
  if (s.c != in_) {
    throw ShapeError("deconv " + weight.name + ": expected " + std::to_string(in_) +
                     " input channels, got " + std::to_string(s.c));
  }
  const Shape os = output_shape(s);
  Tensor<T> y(os);
  const int kdim = out_ * geom_.kh * geom_.kw;
  const int spatial = s.h * s.w;
  std::vector<T> col(static_cast<std::size_t>(kdim) * spatial);
  for (int n = 0; n < s.n; ++n) {
    gemm(true, false, kdim, spatial, in_, T(1), weight.value.data(), x.sample(n), T(0),
         col.data());
    col2im(col.data(), out_, os.h, os.w, geom_, y.sample(n));
    if (has_bias) {
      for (int c = 0; c < out_; ++c) {
        T* plane = y.sample(n) + c * os.plane();
        const T b = bias.value[c];
        for (std::size_t i = 0; i < os.plane(); ++i) plane[i] += b;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& x, const Tensor<T>& dy,
                                       bool accumulate) {
  const Shape& s = x.shape();
  const Shape& os = dy.shape();
  Tensor<T> dx(s);
  const int kdim = out_ * geom_.kh * geom_.kw;
  const int spatial = s.h * s.w;
  std::vector<T> col(static_cast<std::size_t>(kdim) * spatial);
  for (int n = 0; n < s.n; ++n) {
    im2col(dy.sample(n), out_, os.h, os.w, geom_, col.data());
    gemm(false, false, in_, spatial, kdim, T(1), weight.value.data(), col.data(), T(0),
         dx.sample(n));
    if (accumulate) {
      gemm(false, true, in_, kdim, spatial, T(1), x.sample(n), col.data(), T(1),
           weight.grad.data());
      if (has_bias) {
        for (int c = 0; c < out_; ++c) {
          const T* plane = dy.sample(n) + c * os.plane();
          T acc = 0;
          for (std::size_t i = 0; i < os.plane(); ++i) acc += plane[i];
          bias.grad[c] += acc;
        }
      }
    }
  }
  return dx;
}

template <typename T>
void ConvTranspose2d<T>::collect(ParamList<T>& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// Normalization

template <typename T>
BatchNorm2d<T>::BatchNorm2d(const std::string& name, int channels, T eps, T momentum)
    : gamma(name + ".weight", {1, channels, 1, 1}),
      beta(name + ".bias", {1, channels, 1, 1}),
      running_mean(name + ".running_mean", {1, channels, 1, 1}, false),
      running_var(name + ".running_var", {1, channels, 1, 1}, false),
      channels_(channels),
      eps_(eps),
      momentum_(momentum) {
  gamma.value.fill(T(1));
  running_var.value.fill(T(1));
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode, NormCache<T>* cache) {
  const Shape& s = x.shape();
  if (s.c != channels_) {
    throw ShapeError("batchnorm " + gamma.name + ": expected " + std::to_string(channels_) +
                     " channels, got " + std::to_string(s.c));
  }
  const std::size_t plane = s.plane();
  const std::size_t count = plane * s.n;
  Tensor<T> y(s);
  Tensor<T> x_hat(s);
  std::vector<T> inv_std(channels_);
  for (int c = 0; c < channels_; ++c) {
    T mean, var;
    if (mode == Mode::kTrain) {
      double sum = 0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x.sample(n) + c * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = static_cast<T>(sum / count);
      double sq = 0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x.sample(n) + c * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      var = static_cast<T>(sq / count);
      const T unbiased = count > 1 ? static_cast<T>(sq / (count - 1)) : var;
      running_mean.value[c] = (T(1) - momentum_) * running_mean.value[c] + momentum_ * mean;
      running_var.value[c] = (T(1) - momentum_) * running_var.value[c] + momentum_ * unbiased;
    } else {
      mean = running_mean.value[c];
      var = running_var.value[c];
    }
    const T istd = T(1) / std::sqrt(var + eps_);
    inv_std[c] = istd;
    const T g = gamma.value[c];
    const T b = beta.value[c];
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.sample(n) + c * plane;
      T* xh = x_hat.sample(n) + c * plane;
      T* q = y.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = (p[i] - mean) * istd;
        q[i] = g * xh[i] + b;
      }
    }
  }
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::infer(const Tensor<T>& x) const {
  const Shape& s = x.shape();
  if (s.c != channels_) {
    throw ShapeError("batchnorm " + gamma.name + ": expected " + std::to_string(channels_) +
                     " channels, got " + std::to_string(s.c));
  }
  const std::size_t plane = s.plane();
  Tensor<T> y(s);
  for (int c = 0; c < channels_; ++c) {
    const T scale = gamma.value[c] / std::sqrt(running_var.value[c] + eps_);
    const T shift = beta.value[c] - running_mean.value[c] * scale;
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.sample(n) + c * plane;
      T* q = y.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) q[i] = p[i] * scale + shift;
    }
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const NormCache<T>& cache, const Tensor<T>& dy,
                                   bool accumulate) {
  const Shape& s = dy.shape();
  const std::size_t plane = s.plane();
  const T count = static_cast<T>(plane * s.n);
  Tensor<T> dx(s);
  for (int c = 0; c < channels_; ++c) {
    T sum_dy = 0, sum_dy_xh = 0;
    for (int n = 0; n < s.n; ++n) {
      const T* g = dy.sample(n) + c * plane;
      const T* xh = cache.x_hat.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += g[i];
        sum_dy_xh += g[i] * xh[i];
      }
    }
    if (accumulate) {
      gamma.grad[c] += sum_dy_xh;
      beta.grad[c] += sum_dy;
    }
    const T scale = gamma.value[c] * cache.inv_std[c];
    for (int n = 0; n < s.n; ++n) {
      const T* g = dy.sample(n) + c * plane;
      const T* xh = cache.x_hat.sample(n) + c * plane;
      T* d = dx.sample(n) + c * plane;
      if (cache.mode == Mode::kTrain) {
        for (std::size_t i = 0; i < plane; ++i) {
          d[i] = scale * (g[i] - sum_dy / count - xh[i] * sum_dy_xh / count);
        }
      } else {
        for (std::size_t i = 0; i < plane; ++i) d[i] = scale * g[i];
      }
    }
  }
  return dx;
}

template <typename T>
void BatchNorm2d<T>::collect(ParamList<T>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
  out.push_back(&running_mean);
  out.push_back(&running_var);
}

template <typename T>
Tensor<T> InstanceNorm2d<T>::forward(const Tensor<T>& x, NormCache<T>* cache) const {
  const Shape& s = x.shape();
  const std::size_t plane = s.plane();
  Tensor<T> y(s);
  std::vector<T> inv_std(static_cast<std::size_t>(s.n) * s.c);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* p = x.sample(n) + c * plane;
      T* q = y.sample(n) + c * plane;
      double sum = 0, sq = 0;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      const double mean = sum / plane;
      for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
      const T istd = static_cast<T>(1.0 / std::sqrt(sq / plane + eps_));
      inv_std[static_cast<std::size_t>(n) * s.c + c] = istd;
      for (std::size_t i = 0; i < plane; ++i) q[i] = static_cast<T>((p[i] - mean) * istd);
    }
  }
  if (cache) {
    cache->x_hat = y;
    cache->inv_std = std::move(inv_std);
    cache->mode = Mode::kTrain;
  }
  return y;
}

template <typename T>
Tensor<T> InstanceNorm2d<T>::backward(const NormCache<T>& cache, const Tensor<T>& dy) const {
  const Shape& s = dy.shape();
  const std::size_t plane = s.plane();
  const T count = static_cast<T>(plane);
  Tensor<T> dx(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* g = dy.sample(n) + c * plane;
      const T* xh = cache.x_hat.sample(n) + c * plane;
      T* d = dx.sample(n) + c * plane;
      T sum_dy = 0, sum_dy_xh = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += g[i];
        sum_dy_xh += g[i] * xh[i];
      }
      const T istd = cache.inv_std[static_cast<std::size_t>(n) * s.c + c];
      for (std::size_t i = 0; i < plane; ++i) {
        d[i] = istd * (g[i] - sum_dy / count - xh[i] * sum_dy_xh / count);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Pointwise activations

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
  return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& dy, T slope) {
  Tensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : slope * dy[i];
  return dx;
}

template <typename T>
Tensor<T> tanh_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

template <typename T>
Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (T(1) - y[i] * y[i]);
  return dx;
}

// ---------------------------------------------------------------------------
// Pooling and resampling

template <typename T>
Tensor<T> avg_pool(const Tensor<T>& x, const ConvGeometry& g, bool count_include_pad) {
  const Shape& s = x.shape();
  Tensor<T> y({s.n, s.c, g.out_h(s.h), g.out_w(s.w)});
  const Shape& os = y.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < os.h; ++oy) {
        for (int ox = 0; ox < os.w; ++ox) {
          T acc = 0;
          int valid = 0;
          for (int i = 0; i < g.kh; ++i) {
            const int iy = oy * g.sh - g.ph + i;
            if (iy < 0 || iy >= s.h) continue;
            for (int j = 0; j < g.kw; ++j) {
              const int ix = ox * g.sw - g.pw + j;
              if (ix < 0 || ix >= s.w) continue;
              acc += x.at(n, c, iy, ix);
              ++valid;
            }
          }
          const int denom = count_include_pad ? g.kh * g.kw : valid;
          y.at(n, c, oy, ox) = acc / static_cast<T>(denom);
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> avg_pool_backward(const Shape& in, const Tensor<T>& dy, int k) {
  Tensor<T> dx(in);
  const T scale = T(1) / static_cast<T>(k * k);
  const Shape& os = dy.shape();
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      for (int y = 0; y < in.h; ++y) {
        const int oy = y / k;
        if (oy >= os.h) continue;
        for (int x = 0; x < in.w; ++x) {
          const int ox = x / k;
          if (ox < os.w) dx.at(n, c, y, x) = dy.at(n, c, oy, ox) * scale;
        }
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> max_pool(const Tensor<T>& x, const ConvGeometry& g) {
  const Shape& s = x.shape();
  Tensor<T> y({s.n, s.c, g.out_h(s.h), g.out_w(s.w)});
  const Shape& os = y.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < os.h; ++oy) {
        for (int ox = 0; ox < os.w; ++ox) {
          T best = -std::numeric_limits<T>::infinity();
          for (int i = 0; i < g.kh; ++i) {
            const int iy = oy * g.sh - g.ph + i;
            if (iy < 0 || iy >= s.h) continue;
            for (int j = 0; j < g.kw; ++j) {
              const int ix = ox * g.sw - g.pw + j;
              if (ix < 0 || ix >= s.w) continue;
              best = std::max(best, x.at(n, c, iy, ix));
            }
          }
          y.at(n, c, oy, ox) = best;
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  const Shape& s = x.shape();
  Tensor<T> y({s.n, s.c, 1, 1});
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* p = x.sample(n) + c * plane;
      double acc = 0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      y.at(n, c, 0, 0) = static_cast<T>(acc / plane);
    }
  }
  return y;
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor) {
  const Shape& s = x.shape();
  Tensor<T> y({s.n, s.c, s.h * factor, s.w * factor});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int yy = 0; yy < s.h * factor; ++yy)
        for (int xx = 0; xx < s.w * factor; ++xx)
          y.at(n, c, yy, xx) = x.at(n, c, yy / factor, xx / factor);
  return y;
}

template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& dy, int factor) {
  const Shape& s = dy.shape();
  Tensor<T> dx({s.n, s.c, s.h / factor, s.w / factor});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int yy = 0; yy < s.h; ++yy)
        for (int xx = 0; xx < s.w; ++xx)
          dx.at(n, c, yy / factor, xx / factor) += dy.at(n, c, yy, xx);
  return dx;
}

#define SIGAN_INSTANTIATE_LAYERS(T)                                                        \
  template void im2col<T>(const T*, int, int, int, const ConvGeometry&, T*);               \
  template void col2im<T>(const T*, int, int, int, const ConvGeometry&, T*);               \
  template class Conv2d<T>;                                                                \
  template class ConvTranspose2d<T>;                                                       \
  template class BatchNorm2d<T>;                                                           \
  template class InstanceNorm2d<T>;                                                        \
  template Tensor<T> leaky_relu<T>(const Tensor<T>&, T);                                   \
  template Tensor<T> leaky_relu_backward<T>(const Tensor<T>&, const Tensor<T>&, T);        \
  template Tensor<T> tanh_forward<T>(const Tensor<T>&);                                    \
  template Tensor<T> tanh_backward<T>(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> avg_pool<T>(const Tensor<T>&, const ConvGeometry&, bool);             \
  template Tensor<T> avg_pool_backward<T>(const Shape&, const Tensor<T>&, int);            \
  template Tensor<T> max_pool<T>(const Tensor<T>&, const ConvGeometry&);                   \
  template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                                 \
  template Tensor<T> upsample_nearest<T>(const Tensor<T>&, int);                           \
  template Tensor<T> upsample_nearest_backward<T>(const Tensor<T>&, int);

SIGAN_INSTANTIATE_LAYERS(float)
SIGAN_INSTANTIATE_LAYERS(double)

}  // namespace sigan::nn
