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

#ifndef RCG_ENCODER_HPP
#define RCG_ENCODER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rcg/layers.hpp"
#include "rcg/optim.hpp"
#include "rcg/rng.hpp"
#include "rcg/tensor.hpp"

namespace rcg {

/// A representation vector, the interface between all pipeline stages.
/// `normalized` records that the vector has been standardized by its own
/// mean and population variance.
template <typename T>
struct Representation {
  std::vector<T> values;
  bool normalized = false;

  std::size_t dim() const { return values.size(); }
};

/// Standardizes a vector by its own mean and population std. Idempotent up
/// to roundoff; rejects (near-)constant vectors.
template <typename T>
Representation<T> normalize_rep(const std::vector<T>& v) {
  if (v.size() < 2) throw UsageError("normalize_rep needs at least 2 elements");
  double mean = 0.0;
  for (T x : v) mean += static_cast<double>(x);
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (T x : v) {
    const double c = static_cast<double>(x) - mean;
    var += c * c;
  }
  var /= static_cast<double>(v.size());
  if (var <= 1e-12)
    throw DegenerateRepresentationError("representation variance below 1e-12, cannot normalize");
  const double inv_std = 1.0 / std::sqrt(var);
  Representation<T> rep;
  rep.values.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    rep.values[i] = static_cast<T>((static_cast<double>(v[i]) - mean) * inv_std);
  rep.normalized = true;
  return rep;
}

struct EncoderConfig {
  std::size_t input_dim = 256;
  std::vector<std::size_t> hidden_dims = {512, 512};
  std::size_t projection_dim = 256;
  double temperature = 0.2;
  double aug_noise_std = 0.05;
  std::size_t aug_shift_radius = 1;

  void validate() const {
    if (projection_dim < 2) throw ConfigError("projection_dim must be >= 2");
    if (temperature <= 0.0) throw ConfigError("temperature must be positive");
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  }
};

/// MLP backbone plus linear projection head. The final affine is the
/// projection head; its output is the (unnormalized) representation.
template <typename T>
struct EncoderNet {
  EncoderConfig cfg;
  std::vector<Affine<T>> linears;
  std::vector<Silu<T>> acts;
  bool trained = false;

  static EncoderNet build(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderNet net;
    net.cfg = cfg;
    std::size_t prev = cfg.input_dim;
    for (std::size_t h : cfg.hidden_dims) {
      net.linears.push_back(Affine<T>::make(prev, h, rng));
      net.acts.emplace_back();
      prev = h;
    }
    net.linears.push_back(Affine<T>::make(prev, cfg.projection_dim, rng));
    return net;
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.cols() != cfg.input_dim)
      throw ConfigError("encoder expects input dim " + std::to_string(cfg.input_dim) + ", got " +
                        shape_str(x.shape));
    Tensor<T> h = x;
    for (std::size_t i = 0; i + 1 < linears.size(); ++i) h = acts[i].forward(linears[i].forward(h));
    return linears.back().forward(h);
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    Tensor<T> g = linears.back().backward(grad_out);
    for (std::size_t i = linears.size() - 1; i-- > 0;)
      g = linears[i].backward(acts[i].backward(g));
    return g;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (std::size_t i = 0; i + 1 < linears.size(); ++i)
      linears[i].collect("backbone." + std::to_string(i), out);
    linears.back().collect("head", out);
    return out;
  }
};

/// Single-item encode; returns the unnormalized projection output.
template <typename T>
Representation<T> encode(EncoderNet<T>& net, const std::vector<T>& item) {
  Tensor<T> x({1, item.size()}, item);
  Tensor<T> y = net.forward(x);
  Representation<T> rep;
  rep.values = y.data;
  rep.normalized = false;
  return rep;
}

/// Stochastic view: additive Gaussian noise clamped to [0,1], then an
/// integer pixel shift within the given radius (zero fill).
template <typename T>
std::vector<T> augment(const std::vector<T>& image, std::size_t height, std::size_t width,
                       double noise_std, std::size_t shift_radius, Rng& rng) {
  if (image.size() != height * width) throw UsageError("augment image size mismatch");
  std::vector<T> noisy(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    double v = static_cast<double>(image[i]);
    if (noise_std > 0.0) v += noise_std * rng.gaussian();
    noisy[i] = static_cast<T>(std::clamp(v, 0.0, 1.0));
  }
  if (shift_radius == 0) return noisy;
  const std::int64_t r = static_cast<std::int64_t>(shift_radius);
  const std::int64_t dy = static_cast<std::int64_t>(rng.below(2 * shift_radius + 1)) - r;
  const std::int64_t dx = static_cast<std::int64_t>(rng.below(2 * shift_radius + 1)) - r;
  std::vector<T> out(image.size(), T(0));
  const std::int64_t h = static_cast<std::int64_t>(height), w = static_cast<std::int64_t>(width);
  for (std::int64_t y = 0; y < h; ++y) {
    const std::int64_t sy = y - dy;
    if (sy < 0 || sy >= h) continue;
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t sx = x - dx;
      if (sx < 0 || sx >= w) continue;
      out[static_cast<std::size_t>(y * w + x)] = noisy[static_cast<std::size_t>(sy * w + sx)];
    }
  }
  return out;
}

namespace detail {

/// Rows L2-normalized; returns norms for the backward pass.
template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, std::vector<double>* norms = nullptr) {
  Tensor<T> out = x;
  if (norms) norms->assign(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const T* xi = x.row(i);
    double nsq = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j)
      nsq += static_cast<double>(xi[j]) * static_cast<double>(xi[j]);
    const double norm = std::sqrt(nsq);
    if (norm <= 0.0) throw UsageError("cannot L2-normalize a zero vector");
    if (norms) (*norms)[i] = norm;
    T* oi = out.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) oi[j] = static_cast<T>(static_cast<double>(xi[j]) / norm);
  }
  return out;
}

}  // namespace detail

/// NT-Xent contrastive loss over two aligned batches of views.
///
/// Rows are L2-normalized internally; each of the 2N anchors classifies its
/// positive against the 2N-2 other samples plus the positive, and the
/// result is averaged over anchors. When grad_out is non-null it receives
/// d(loss)/d(embeddings) with rows stacked [views_a; views_b].
template <typename T>
double info_nce_loss(const Tensor<T>& views_a, const Tensor<T>& views_b, double temperature,
                     Tensor<T>* grad_out = nullptr) {
  if (views_a.rows() == 0) throw UsageError("info_nce_loss needs at least one pair");
  if (!views_a.same_shape(views_b)) throw UsageError("info_nce_loss view shapes differ");
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
  const std::size_t n = views_a.rows(), d = views_a.cols();
  const std::size_t m = 2 * n;

  Tensor<T> e = Tensor<T>::zeros({m, d});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(views_a.row(i), views_a.row(i) + d, e.row(i));
    std::copy(views_b.row(i), views_b.row(i) + d, e.row(n + i));
  }
  std::vector<double> norms;
  const Tensor<T> u = detail::l2_normalize_rows(e, &norms);

  // Similarity logits s[i][j] = <u_i, u_j> / temperature, self excluded.
  Tensor<double> s = Tensor<double>::zeros({m, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      const T* ui = u.row(i);
      const T* uj = u.row(j);
      for (std::size_t c = 0; c < d; ++c)
        dot += static_cast<double>(ui[c]) * static_cast<double>(uj[c]);
      s.at(i, j) = dot / temperature;
    }

  double loss = 0.0;
  Tensor<double> gs;  // d(loss)/d(s), zero diagonal
  if (grad_out) gs = Tensor<double>::zeros({m, m});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t pos = i < n ? i + n : i - n;
    double mx = -1e300;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) mx = std::max(mx, s.at(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) denom += std::exp(s.at(i, j) - mx);
    loss += (std::log(denom) + mx) - s.at(i, pos);
    if (grad_out) {
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        const double p = std::exp(s.at(i, j) - mx) / denom;
        gs.at(i, j) = (p - (j == pos ? 1.0 : 0.0)) / static_cast<double>(m);
      }
    }
  }
  loss /= static_cast<double>(m);

  if (grad_out) {
    // grad wrt u, then back through the row normalization.
    *grad_out = Tensor<T>::zeros({m, d});
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> gu(d, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        const double coef = (gs.at(i, j) + gs.at(j, i)) / temperature;
        const T* uj = u.row(j);
        for (std::size_t c = 0; c < d; ++c) gu[c] += coef * static_cast<double>(uj[c]);
      }
      const T* ui = u.row(i);
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += gu[c] * static_cast<double>(ui[c]);
      T* g = grad_out->row(i);
      for (std::size_t c = 0; c < d; ++c)
        g[c] = static_cast<T>((gu[c] - dot * static_cast<double>(ui[c])) / norms[i]);
    }
  }
  return loss;
}

/// log of the mean over unordered pairs of exp(-t * ||x_i - x_j||^2),
/// vectors L2-normalized internally. More negative means better spread on
/// the sphere.
template <typename T>
double uniformity(const Tensor<T>& reps, double t = 2.0) {
  if (reps.rows() < 2) throw UsageError("uniformity needs at least 2 vectors");
  const Tensor<T> u = detail::l2_normalize_rows(reps);
  const std::size_t n = u.rows(), d = u.cols();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist_sq = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = static_cast<double>(u.at(i, c)) - static_cast<double>(u.at(j, c));
        dist_sq += diff * diff;
      }
      sum += std::exp(-t * dist_sq);
      ++pairs;
    }
  return std::log(sum / static_cast<double>(pairs));
}

/// Result of a training run: the model plus its per-epoch loss trace.
template <typename T>
struct EncoderTrainResult {
  EncoderNet<T> net;
  std::vector<double> epoch_losses;
};

/// Contrastive pretraining over two augmented views per item. `items` is
/// [n, input_dim] with pixel values in [0,1]; height*width must equal
/// input_dim for the shift augmentation.
inline EncoderTrainResult<float> train_encoder(const Tensor<float>& items, std::size_t height,
                                               std::size_t width, const EncoderConfig& cfg,
                                               const TrainConfig& tc, std::uint64_t seed) {
  if (items.rows() == 0) throw UsageError("train_encoder needs a nonempty dataset");
  EncoderTrainResult<float> result;
  Rng init_rng = stream_rng(seed, "encoder-init");
  result.net = EncoderNet<float>::build(cfg, init_rng);
  EncoderNet<float>& net = result.net;

  auto params = net.params();
  AdamWState<float> opt = AdamWState<float>::init(params);

  Rng aug_rng = stream_rng(seed, "encoder-augment");
  Rng order_rng = stream_rng(seed, "encoder-order");
  const std::size_t n = items.rows();
  const std::size_t steps_per_epoch = (n + tc.batch_size - 1) / tc.batch_size;
  const std::size_t total_steps = tc.epochs * steps_per_epoch;
  std::size_t step = 0;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += tc.batch_size) {
      const std::size_t b = std::min(tc.batch_size, n - start);
      Tensor<float> x = Tensor<float>::zeros({2 * b, cfg.input_dim});
      for (std::size_t i = 0; i < b; ++i) {
        const float* src = items.row(order[start + i]);
        const std::vector<float> item(src, src + cfg.input_dim);
        const std::vector<float> va =
            augment(item, height, width, cfg.aug_noise_std, cfg.aug_shift_radius, aug_rng);
        const std::vector<float> vb =
            augment(item, height, width, cfg.aug_noise_std, cfg.aug_shift_radius, aug_rng);
        std::copy(va.begin(), va.end(), x.row(i));
        std::copy(vb.begin(), vb.end(), x.row(b + i));
      }
      Tensor<float> emb = net.forward(x);
      Tensor<float> va = Tensor<float>::zeros({b, cfg.projection_dim});
      Tensor<float> vb = Tensor<float>::zeros({b, cfg.projection_dim});
      for (std::size_t i = 0; i < b; ++i) {
        std::copy(emb.row(i), emb.row(i) + cfg.projection_dim, va.row(i));
        std::copy(emb.row(b + i), emb.row(b + i) + cfg.projection_dim, vb.row(i));
      }
      Tensor<float> grad;
      const double loss = info_nce_loss(va, vb, cfg.temperature, &grad);
      if (!std::isfinite(loss))
        throw TrainingError("encoder loss diverged at epoch " + std::to_string(epoch));
      zero_grads(params);
      net.backward(grad);
      adamw_step(params, opt, adamw);
      epoch_loss += loss;
      ++batches;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  net.trained = true;
  return result;
}

}  // namespace rcg

#endif  // RCG_ENCODER_HPP
