// Copyright 2026 The rcg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RCG_LAYERS_HPP
#define RCG_LAYERS_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rcg/rng.hpp"
#include "rcg/tensor.hpp"

namespace rcg {

/// Named handle onto one parameter tensor and its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

template <typename T>
void zero_grads(const std::vector<ParamRef<T>>& params) {
  for (const auto& p : params) p.grad->fill(T(0));
}

/// Kaiming-uniform fan-in initialization, U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
template <typename T>
void kaiming_uniform(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (T& x : w.data) x = static_cast<T>((rng.uniform() * 2.0 - 1.0) * bound);
}

/// y = x W + b with W [in,out], b [out]. Caches x for the backward pass.
template <typename T>
struct Affine {
  Tensor<T> w, b;
  Tensor<T> gw, gb;
  Tensor<T> cached_x;
  bool has_cache = false;

  static Affine make(std::size_t in, std::size_t out, Rng& rng) {
    Affine l;
    l.w = Tensor<T>::zeros({in, out});
    l.b = Tensor<T>::zeros({out});
    kaiming_uniform(l.w, in, rng);
    l.gw = Tensor<T>::zeros({in, out});
    l.gb = Tensor<T>::zeros({out});
    return l;
  }

  /// Zero weights and bias; used for final output projections so an
  /// untrained network predicts zero noise.
  static Affine make_zero(std::size_t in, std::size_t out) {
    Affine l;
    l.w = Tensor<T>::zeros({in, out});
    l.b = Tensor<T>::zeros({out});
    l.gw = Tensor<T>::zeros({in, out});
    l.gb = Tensor<T>::zeros({out});
    return l;
  }

  std::size_t in_dim() const { return w.shape[0]; }
  std::size_t out_dim() const { return w.shape[1]; }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.cols() != in_dim())
      throw ConfigError("affine expects " + std::to_string(in_dim()) + " columns, got " +
                        shape_str(x.shape));
    require_finite(x, "affine");
    cached_x = x;
    has_cache = true;
    Tensor<T> y = matmul(x, w);
    add_row_vector(y, b);
    return y;
  }

  /// Accumulates gw/gb and returns grad wrt the input (skippable for
  /// untrainable inputs such as sinusoidal timestep embeddings).
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_grad_in = true) {
    if (!has_cache) throw UsageError("affine backward without cached forward input");
    has_cache = false;
    matmul_tn_acc(cached_x, grad_out, gw);
    for (std::size_t i = 0; i < grad_out.rows(); ++i) {
      const T* g = grad_out.row(i);
      for (std::size_t j = 0; j < grad_out.cols(); ++j) gb.data[j] += g[j];
    }
    if (!need_grad_in) return Tensor<T>();
    return matmul_nt(grad_out, w);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }
};

/// Per-row standardization with population variance, then gamma * xhat + beta.
template <typename T>
struct LayerNorm {
  Tensor<T> gamma, beta;
  Tensor<T> ggamma, gbeta;
  double eps = 1e-5;

  Tensor<T> cached_xhat;
  std::vector<double> cached_inv_std;
  bool has_cache = false;

  static LayerNorm make(std::size_t dim) {
    if (dim < 2) throw ConfigError("layer_norm needs dim >= 2");
    LayerNorm l;
    l.gamma = Tensor<T>::full({dim}, T(1));
    l.beta = Tensor<T>::zeros({dim});
    l.ggamma = Tensor<T>::zeros({dim});
    l.gbeta = Tensor<T>::zeros({dim});
    return l;
  }

  std::size_t dim() const { return gamma.size(); }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.cols() != dim()) throw ConfigError("layer_norm dim mismatch: " + shape_str(x.shape));
    require_finite(x, "layer_norm");
    const std::size_t b = x.rows(), d = x.cols();
    Tensor<T> y = Tensor<T>::zeros({b, d});
    cached_xhat = Tensor<T>::zeros({b, d});
    cached_inv_std.assign(b, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      const T* xi = x.row(i);
      double mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) mean += static_cast<double>(xi[j]);
      mean /= static_cast<double>(d);
      double var = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double c = static_cast<double>(xi[j]) - mean;
        var += c * c;
      }
      var /= static_cast<double>(d);
      const double inv_std = 1.0 / std::sqrt(var + eps);
      cached_inv_std[i] = inv_std;
      T* xh = cached_xhat.row(i);
      T* yi = y.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        xh[j] = static_cast<T>((static_cast<double>(xi[j]) - mean) * inv_std);
        yi[j] = gamma.data[j] * xh[j] + beta.data[j];
      }
    }
    has_cache = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!has_cache) throw UsageError("layer_norm backward without cached forward input");
    has_cache = false;
    const std::size_t b = grad_out.rows(), d = grad_out.cols();
    Tensor<T> gx = Tensor<T>::zeros({b, d});
    for (std::size_t i = 0; i < b; ++i) {
      const T* g = grad_out.row(i);
      const T* xh = cached_xhat.row(i);
      const double inv_std = cached_inv_std[i];
      double sum_gxhat = 0.0, sum_gxhat_xhat = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double gj = static_cast<double>(g[j]);
        const double gxh = gj * static_cast<double>(gamma.data[j]);
        ggamma.data[j] += static_cast<T>(gj * static_cast<double>(xh[j]));
        gbeta.data[j] += g[j];
        sum_gxhat += gxh;
        sum_gxhat_xhat += gxh * static_cast<double>(xh[j]);
      }
      T* gxi = gx.row(i);
      const double inv_d = 1.0 / static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j) {
        const double gxh = static_cast<double>(g[j]) * static_cast<double>(gamma.data[j]);
        gxi[j] = static_cast<T>(
            inv_std * (gxh - inv_d * sum_gxhat - static_cast<double>(xh[j]) * inv_d * sum_gxhat_xhat));
      }
    }
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
  }
};

template <typename T>
T sigmoid_value(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
T silu_value(T x) {
  return x * sigmoid_value(x);
}

/// Elementwise x * sigmoid(x).
template <typename T>
struct Silu {
  Tensor<T> cached_x;
  bool has_cache = false;

  Tensor<T> forward(const Tensor<T>& x) {
    require_finite(x, "silu");
    cached_x = x;
    has_cache = true;
    Tensor<T> y = x;
    for (T& v : y.data) v = silu_value(v);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (!has_cache) throw UsageError("silu backward without cached forward input");
    has_cache = false;
    Tensor<T> gx = grad_out;
    for (std::size_t i = 0; i < gx.data.size(); ++i) {
      const T x = cached_x.data[i];
      const T s = sigmoid_value(x);
      gx.data[i] *= s * (T(1) + x * (T(1) - s));
    }
    return gx;
  }
};

/// One "Layer" unit of the fully-connected diffusion backbones:
/// LayerNorm -> SiLU -> Linear.
template <typename T>
struct FcLayer {
  LayerNorm<T> norm;
  Silu<T> act;
  Affine<T> lin;

  static FcLayer make(std::size_t in, std::size_t out, Rng& rng, bool zero_linear = false) {
    FcLayer l;
    l.norm = LayerNorm<T>::make(in);
    l.lin = zero_linear ? Affine<T>::make_zero(in, out) : Affine<T>::make(in, out, rng);
    return l;
  }

  Tensor<T> forward(const Tensor<T>& x) { return lin.forward(act.forward(norm.forward(x))); }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    return norm.backward(act.backward(lin.backward(grad_out)));
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    norm.collect(prefix + ".norm", out);
    lin.collect(prefix + ".lin", out);
  }
};

/// Lookup table of learned vectors (class labels). Backward scatter-adds
/// row gradients into the table.
template <typename T>
struct Embedding {
  Tensor<T> table;  // [count, dim]
  Tensor<T> gtable;
  std::vector<std::size_t> cached_idx;
  bool has_cache = false;

  static Embedding make(std::size_t count, std::size_t dim, Rng& rng) {
    Embedding e;
    e.table = Tensor<T>::zeros({count, dim});
    for (T& x : e.table.data) x = static_cast<T>(rng.gaussian() * 0.02);
    e.gtable = Tensor<T>::zeros({count, dim});
    return e;
  }

  std::size_t count() const { return table.rows(); }
  std::size_t dim() const { return table.cols(); }

  Tensor<T> forward(const std::vector<std::size_t>& idx) {
    Tensor<T> out = Tensor<T>::zeros({idx.size(), dim()});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= count()) throw UsageError("embedding index out of range");
      const T* src = table.row(idx[i]);
      T* dst = out.row(i);
      for (std::size_t j = 0; j < dim(); ++j) dst[j] = src[j];
    }
    cached_idx = idx;
    has_cache = true;
    return out;
  }

  void backward(const Tensor<T>& grad_out) {
    if (!has_cache) throw UsageError("embedding backward without cached forward indices");
    has_cache = false;
    for (std::size_t i = 0; i < cached_idx.size(); ++i) {
      T* dst = gtable.row(cached_idx[i]);
      const T* g = grad_out.row(i);
      for (std::size_t j = 0; j < dim(); ++j) dst[j] += g[j];
    }
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".table", &table, &gtable});
  }
};

}  // namespace rcg

#endif  // RCG_LAYERS_HPP
