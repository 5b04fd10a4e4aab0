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

#ifndef RCG_RDM_HPP
#define RCG_RDM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcg/backbone.hpp"
#include "rcg/diffusion.hpp"
#include "rcg/encoder.hpp"
#include "rcg/optim.hpp"

namespace rcg {

/// Representation diffusion model architecture. num_classes == 0 builds the
/// unconditional backbone; the class pathway is then absent, not zeroed.
struct RdmConfig {
  std::size_t num_blocks = 12;
  std::size_t hidden_dim = 1536;
  std::size_t rep_dim = 256;
  std::size_t timestep_embed_dim = 256;
  std::size_t class_embed_dim = 512;
  std::size_t num_classes = 0;

  bool conditional() const { return num_classes > 0; }

  void validate() const {
    if (num_blocks < 1) throw ConfigError("rdm num_blocks must be >= 1");
    if (hidden_dim < rep_dim) throw ConfigError("rdm hidden_dim must be >= rep_dim");
    if (timestep_embed_dim < 2 || timestep_embed_dim % 2 != 0)
      throw ConfigError("rdm timestep_embed_dim must be even and >= 2");
    if (conditional() && class_embed_dim < 2) throw ConfigError("rdm class_embed_dim must be >= 2");
    if (rep_dim < 1) throw ConfigError("rdm rep_dim must be >= 1");
  }
};

template <typename T>
struct RdmNet {
  RdmConfig cfg;
  CondMlp<T> core;
  std::optional<Embedding<T>> class_embed;

  static RdmNet build(const RdmConfig& cfg, Rng& rng) {
    cfg.validate();
    RdmNet net;
    net.cfg = cfg;
    net.core = CondMlp<T>::make(cfg.rep_dim, cfg.hidden_dim, cfg.num_blocks,
                                cfg.timestep_embed_dim, cfg.conditional() ? cfg.class_embed_dim : 0,
                                rng);
    if (cfg.conditional()) net.class_embed = Embedding<T>::make(cfg.num_classes, cfg.class_embed_dim, rng);
    return net;
  }

  /// Predicts the noise component of z_t. Labels are required iff the model
  /// is class-conditional.
  Tensor<T> forward(const Tensor<T>& z_t, const std::vector<std::size_t>& ts,
                    const std::vector<std::size_t>* labels = nullptr) {
    if (cfg.conditional()) {
      if (!labels) throw UsageError("conditional rdm called without class labels");
      const Tensor<T> cond = class_embed->forward(*labels);
      return core.forward(z_t, ts, &cond);
    }
    if (labels) throw UsageError("unconditional rdm called with class labels");
    return core.forward(z_t, ts, nullptr);
  }

  void backward(const Tensor<T>& grad_out) {
    Tensor<T> grad_cond = core.backward(grad_out);
    if (cfg.conditional()) class_embed->backward(grad_cond);
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    core.collect(out);
    if (class_embed) class_embed->collect("class_embed", out);
    return out;
  }
};

inline std::vector<std::pair<std::string, std::vector<std::size_t>>> rdm_tensor_spec(
    const RdmConfig& cfg) {
  cfg.validate();
  auto spec = cond_mlp_tensor_spec(cfg.rep_dim, cfg.hidden_dim, cfg.num_blocks,
                                   cfg.timestep_embed_dim,
                                   cfg.conditional() ? cfg.class_embed_dim : 0);
  if (cfg.conditional())
    spec.push_back({"class_embed.table", {cfg.num_classes, cfg.class_embed_dim}});
  return spec;
}

/// Exact parameter count of the backbone a given config constructs.
inline std::size_t rdm_param_count(const RdmConfig& cfg) {
  std::size_t total = 0;
  for (const auto& [name, shape] : rdm_tensor_spec(cfg)) total += numel(shape);
  return total;
}

/// Denoising objective: per item, draw t uniform in [0,T) and eps ~ N(0,I),
/// form z_t and measure ||eps_hat - eps||^2; the loss is the mean over the
/// batch. With with_grad set, parameter gradients are accumulated. Model is
/// anything with the RdmNet forward/backward shape, so tests can inject
/// analytic denoisers.
template <typename T, typename Model>
double rdm_loss(Model& net, const Tensor<T>& z0, const std::vector<std::size_t>* labels,
                const NoiseSchedule& ns, Rng& rng, bool with_grad = false) {
  if (z0.rows() == 0) throw UsageError("rdm_loss needs a nonempty batch");
  const std::size_t b = z0.rows(), d = z0.cols();
  std::vector<std::size_t> ts(b);
  Tensor<T> eps = Tensor<T>::zeros({b, d});
  Tensor<T> zt = Tensor<T>::zeros({b, d});
  for (std::size_t i = 0; i < b; ++i) {
    ts[i] = static_cast<std::size_t>(rng.below(ns.timesteps));
    rng.fill_gaussian(eps.row(i), d);
    const double sa = std::sqrt(ns.alpha_bar[ts[i]]);
    const double sn = std::sqrt(1.0 - ns.alpha_bar[ts[i]]);
    const T* z0i = z0.row(i);
    const T* ei = eps.row(i);
    T* zi = zt.row(i);
    for (std::size_t j = 0; j < d; ++j)
      zi[j] = static_cast<T>(sa * static_cast<double>(z0i[j]) + sn * static_cast<double>(ei[j]));
  }
  Tensor<T> pred = net.forward(zt, ts, labels);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double diff = static_cast<double>(pred.data[i]) - static_cast<double>(eps.data[i]);
    loss += diff * diff;
  }
  loss /= static_cast<double>(b);
  if (with_grad) {
    Tensor<T> g = Tensor<T>::zeros({b, d});
    for (std::size_t i = 0; i < g.data.size(); ++i)
      g.data[i] = static_cast<T>(2.0 * (static_cast<double>(pred.data[i]) -
                                        static_cast<double>(eps.data[i])) /
                                 static_cast<double>(b));
    net.backward(g);
  }
  return loss;
}

/// Samples one batch of representations from Gaussian noise with per-row
/// Rng streams, so row r is bit-identical to sampling it alone.
template <typename T>
Tensor<T> rdm_sample_batch(RdmNet<T>& net, const NoiseSchedule& ns, const SamplerConfig& sc,
                           std::vector<Rng>& row_rng, const std::vector<std::size_t>* labels = nullptr) {
  auto eps_fn = [&](const Tensor<T>& x, std::size_t t, std::size_t) {
    const std::vector<std::size_t> ts(x.rows(), t);
    return net.forward(x, ts, labels);
  };
  return ddim_generate<T>(eps_fn, ns, sc, net.cfg.rep_dim, row_rng);
}

/// Single-representation DDIM sampling (seed taken from the sampler config).
template <typename T>
Representation<T> ddim_sample(RdmNet<T>& net, const NoiseSchedule& ns, const SamplerConfig& sc,
                              std::optional<std::size_t> class_label = std::nullopt) {
  std::vector<Rng> rng{Rng(sc.seed)};
  std::vector<std::size_t> labels;
  const std::vector<std::size_t>* lp = nullptr;
  if (class_label) {
    labels.assign(1, *class_label);
    lp = &labels;
  }
  Tensor<T> out = rdm_sample_batch(net, ns, sc, rng, lp);
  Representation<T> rep;
  rep.values.assign(out.row(0), out.row(0) + net.cfg.rep_dim);
  rep.normalized = false;
  return rep;
}

template <typename T>
struct RdmTrainResult {
  RdmNet<T> net;
  std::vector<double> epoch_losses;
};

/// Trains the RDM on a store of representations (labels required iff the
/// config is class-conditional).
inline RdmTrainResult<float> train_rdm(const Tensor<float>& reps, const std::vector<int>& labels,
                                       const RdmConfig& cfg, const NoiseSchedule& ns,
                                       const TrainConfig& tc, std::uint64_t seed) {
  if (reps.rows() == 0) throw UsageError("train_rdm needs a nonempty representation store");
  if (reps.cols() != cfg.rep_dim) throw ConfigError("rep store dim does not match rdm config");
  RdmTrainResult<float> result;
  Rng init_rng = stream_rng(seed, "rdm-init");
  result.net = RdmNet<float>::build(cfg, init_rng);
  RdmNet<float>& net = result.net;

  auto params = net.params();
  AdamWState<float> opt = AdamWState<float>::init(params);

  Rng noise_rng = stream_rng(seed, "rdm-noise");
  Rng order_rng = stream_rng(seed, "rdm-order");
  const std::size_t n = reps.rows();
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
      Tensor<float> z0 = Tensor<float>::zeros({b, cfg.rep_dim});
      std::vector<std::size_t> batch_labels(b, 0);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t src = order[start + i];
        std::copy(reps.row(src), reps.row(src) + cfg.rep_dim, z0.row(i));
        if (cfg.conditional()) {
          if (src >= labels.size() || labels[src] < 0 ||
              static_cast<std::size_t>(labels[src]) >= cfg.num_classes)
            throw UsageError("conditional rdm training needs a valid label per item");
          batch_labels[i] = static_cast<std::size_t>(labels[src]);
        }
      }
      zero_grads(params);
      const double loss = rdm_loss(net, z0, cfg.conditional() ? &batch_labels : nullptr, ns,
                                   noise_rng, /*with_grad=*/true);
      if (!std::isfinite(loss))
        throw TrainingError("rdm loss diverged at epoch " + std::to_string(epoch));
      adamw_step(params, opt, tc.adamw(step++, total_steps));
      epoch_loss += loss;
      ++batches;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

}  // namespace rcg

#endif  // RCG_RDM_HPP
