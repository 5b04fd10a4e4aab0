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

#ifndef RCG_TENSOR_HPP
#define RCG_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "rcg/errors.hpp"

namespace rcg {

inline std::size_t numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return shape.empty() ? 0 : n;
}

/// Dense row-major array with an explicit shape. No views, no broadcasting
/// beyond the bias-add helpers below; every operation spells out its loop.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel(shape) != data.size())
      throw ConfigError("tensor shape does not match payload length");
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    Tensor t;
    t.shape = std::move(s);
    t.data.assign(numel(t.shape), T(0));
    return t;
  }

  static Tensor full(std::vector<std::size_t> s, T value) {
    Tensor t = zeros(std::move(s));
    for (T& x : t.data) x = value;
    return t;
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  // 2-D helpers; most of the project works on [batch, dim] matrices.
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }
  T* row(std::size_t r) { return data.data() + r * cols(); }
  const T* row(std::size_t r) const { return data.data() + r * cols(); }
  T& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(T value) {
    for (T& x : data) x = value;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T x : t.data)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

template <typename T>
void require_finite(const Tensor<T>& t, const std::string& where) {
  if (!all_finite(t)) throw UsageError("non-finite values entering " + where);
}

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// C[m,n] = A[m,k] * B[k,n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw ConfigError("matmul inner dims differ: " + shape_str(a.shape) + " x " + shape_str(b.shape));
  Tensor<T> c = Tensor<T>::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a.row(i);
    T* ci = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b.row(p);
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

/// C[k,n] += A[m,k]^T * B[m,n]  (gradient of weights: x^T * dy)
template <typename T>
void matmul_tn_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != m || c.rows() != k || c.cols() != n)
    throw ConfigError("matmul_tn_acc shape mismatch");
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a.row(i);
    const T* bi = b.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      T* cp = c.row(p);
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

/// C[m,k] = A[m,n] * B[k,n]^T  (gradient of inputs: dy * W^T)
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t m = a.rows(), n = a.cols(), k = b.rows();
  if (b.cols() != n)
    throw ConfigError("matmul_nt inner dims differ: " + shape_str(a.shape) + " x " + shape_str(b.shape));
  Tensor<T> c = Tensor<T>::zeros({m, k});
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a.row(i);
    T* ci = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const T* bp = b.row(p);
      T acc = T(0);
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
      ci[p] = acc;
    }
  }
  return c;
}

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw ConfigError("add_inplace shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

/// Adds a length-n vector to every row of an [m,n] matrix (bias add).
template <typename T>
void add_row_vector(Tensor<T>& a, const Tensor<T>& v) {
  if (v.size() != a.cols()) throw ConfigError("bias length does not match columns");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) ai[j] += v.data[j];
  }
}

template <typename T>
void scale_inplace(Tensor<T>& a, T s) {
  for (T& x : a.data) x *= s;
}

}  // namespace rcg

#endif  // RCG_TENSOR_HPP
