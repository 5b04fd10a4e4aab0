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

#ifndef RCG_GENERATOR_HPP
#define RCG_GENERATOR_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "rcg/backbone.hpp"
#include "rcg/diffusion.hpp"
#include "rcg/optim.hpp"

namespace rcg {

/// Representation-conditioned image denoiser over flattened pixels.
/// `null_embedding` is the learned stand-in for "no representation" used by
/// representation dropout and classifier-free guidance.
struct GenConfig {
  std::size_t image_dim = 256;  // height * width * channels
  std::size_t hidden_dim = 512;
  std::size_t num_blocks = 6;
  std::size_t rep_dim = 256;
  std::size_t timestep_embed_dim = 256;
  double rep_drop_rate = 0.1;

  void validate() const {
    if (image_dim < 1) throw ConfigError("generator image_dim must be >= 1");
    if (num_blocks < 1) throw ConfigError("generator num_blocks must be >= 1");
    if (rep_dim < 2) throw ConfigError("generator rep_dim must be >= 2");
    if (!(rep_drop_rate >= 0.0 && rep_drop_rate <= 1.0))
      throw ConfigError("rep_drop_rate must lie in [0, 1]");
    if (timestep_embed_dim < 2 || timestep_embed_dim % 2 != 0)
      throw ConfigError("generator timestep_embed_dim must be even and >= 2");
  }
};

struct GuidanceConfig {
  double tau = 0.0;  // 0 = guidance off
  std::string schedule = "linear";  // {constant, linear}

  void validate() const {
    if (tau < 0.0) throw ConfigError("guidance scale must be >= 0");
    if (schedule != "linear" && schedule != "constant")
      throw ConfigError("guidance schedule must be 'linear' or 'constant'");
  }
};

/// pred_g = pred_c + tau * (pred_c - pred_u), applied to noise predictions.
template <typename T>
Tensor<T> guided_prediction(const Tensor<T>& pred_c, const Tensor<T>& pred_u, double tau) {
  if (!pred_c.same_shape(pred_u)) throw UsageError("guided_prediction shape mismatch");
  Tensor<T> out = pred_c;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = static_cast<T>(static_cast<double>(pred_c.data[i]) +
                                 tau * (static_cast<double>(pred_c.data[i]) -
                                        static_cast<double>(pred_u.data[i])));
  return out;
}

/// Per-step guidance scale. Linear ramps 0 -> tau_max as sampling proceeds
/// from noise to data; constant holds tau_max throughout.
inline double guidance_schedule(double tau_max, std::size_t step_index, std::size_t total_steps,
                                const std::string& kind) {
  if (step_index >= total_steps) throw UsageError("guidance step index out of range");
  if (kind == "constant") return tau_max;
  if (kind == "linear") {
    if (total_steps < 2) throw ConfigError("linear guidance schedule needs at least 2 steps");
    return tau_max * static_cast<double>(step_index) / static_cast<double>(total_steps - 1);
  }
  throw ConfigError("unknown guidance schedule '" + kind + "'");
}

template <typename T>
struct GenNet {
  GenConfig cfg;
  CondMlp<T> core;
  Tensor<T> null_embed, null_embed_grad;  // [rep_dim]

  static GenNet build(const GenConfig& cfg, Rng& rng) {
    cfg.validate();
    GenNet net;
    net.cfg = cfg;
    net.core = CondMlp<T>::make(cfg.image_dim, cfg.hidden_dim, cfg.num_blocks,
                                cfg.timestep_embed_dim, cfg.rep_dim, rng);
    net.null_embed = Tensor<T>::zeros({cfg.rep_dim});
    for (T& x : net.null_embed.data) x = static_cast<T>(rng.gaussian() * 0.02);
    net.null_embed_grad = Tensor<T>::zeros({cfg.rep_dim});
    return net;
  }

  /// cond rows are each item's representation or the null embedding.
  Tensor<T> forward(const Tensor<T>& x_t, const std::vector<std::size_t>& ts,
                    const Tensor<T>& cond) {
    return core.forward(x_t, ts, &cond);
  }

  /// Returns grad wrt the condition rows; the trainer scatters rows that
  /// used the null embedding back into null_embed_grad.
  Tensor<T> backward(const Tensor<T>& grad_out) { return core.backward(grad_out); }

  Tensor<T> cond_rows(const std::vector<const T*>& reps_or_null) {
    Tensor<T> cond = Tensor<T>::zeros({reps_or_null.size(), cfg.rep_dim});
    for (std::size_t i = 0; i < reps_or_null.size(); ++i) {
      const T* src = reps_or_null[i] ? reps_or_null[i] : null_embed.data.data();
      std::copy(src, src + cfg.rep_dim, cond.row(i));
    }
    return cond;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    core.collect(out);
    out.push_back({"null_embed", &null_embed, &null_embed_grad});
    return out;
  }
};

inline std::vector<std::pair<std::string, std::vector<std::size_t>>> gen_tensor_spec(
    const GenConfig& cfg) {
  cfg.validate();
  auto spec = cond_mlp_tensor_spec(cfg.image_dim, cfg.hidden_dim, cfg.num_blocks,
                                   cfg.timestep_embed_dim, cfg.rep_dim);
  spec.push_back({"null_embed", {cfg.rep_dim}});
  return spec;
}

inline std::size_t gen_param_count(const GenConfig& cfg) {
  std::size_t total = 0;
  for (const auto& [name, shape] : gen_tensor_spec(cfg)) total += numel(shape);
  return total;
}

/// Parameters belonging to the conditioning pathway alone (per-block rep
/// projections plus the null embedding); the architecture minus these is
/// the matched unconditional backbone.
inline std::size_t gen_conditioning_param_count(const GenConfig& cfg) {
  std::size_t total = 0;
  for (const auto& [name, shape] : gen_tensor_spec(cfg))
    if (name.find("cond_proj") != std::string::npos || name == "null_embed") total += numel(shape);
  return total;
}

/// Pixels [0,1] <-> diffusion range [-1,1].
template <typename T>
T pixel_to_signal(T p) { return static_cast<T>(2) * p - static_cast<T>(1); }
template <typename T>
T signal_to_pixel(T x) {
  const T c = std::clamp(x, static_cast<T>(-1), static_cast<T>(1));
  return (c + static_cast<T>(1)) / static_cast<T>(2);
}

/// DDIM image sampling with classifier-free guidance. `reps` holds one
/// normalized representation per row (or intentionally the null embedding
/// for the unconditional baseline). The null-conditioned prediction is only
/// evaluated at steps where the guidance scale is nonzero, so tau = 0 is
/// structurally the unguided single-evaluation path.
template <typename T>
Tensor<T> sample_images(GenNet<T>& net, const Tensor<T>& reps, const NoiseSchedule& ns,
                        const SamplerConfig& sc, const GuidanceConfig& gc,
                        std::vector<Rng>& row_rng) {
  gc.validate();
  if (reps.rows() != row_rng.size()) throw UsageError("one rng stream per sampled image required");
  if (reps.cols() != net.cfg.rep_dim) throw ConfigError("conditioning rep dim mismatch");
  Tensor<T> null_rows = Tensor<T>::zeros({reps.rows(), net.cfg.rep_dim});
  for (std::size_t i = 0; i < reps.rows(); ++i)
    std::copy(net.null_embed.data.begin(), net.null_embed.data.end(), null_rows.row(i));

  auto eps_fn = [&](const Tensor<T>& x, std::size_t t, std::size_t step_index) {
    const std::vector<std::size_t> ts(x.rows(), t);
    const double tau = guidance_schedule(gc.tau, step_index, sc.ddim_steps, gc.schedule);
    Tensor<T> pred_c = net.forward(x, ts, reps);
    if (tau == 0.0) return pred_c;
    Tensor<T> pred_u = net.forward(x, ts, null_rows);
    return guided_prediction(pred_c, pred_u, tau);
  };
  Tensor<T> x = ddim_generate<T>(eps_fn, ns, sc, net.cfg.image_dim, row_rng);
  for (T& v : x.data) v = signal_to_pixel(v);
  return x;
}

template <typename T>
struct GenTrainResult {
  GenNet<T> net;
  std::vector<double> epoch_losses;
};

/// Noise-prediction training where each item is conditioned on its own
/// representation, replaced by the learned null embedding with probability
/// rep_drop_rate per item per step. Images arrive in [0,1] and are mapped
/// to [-1,1] internally.
inline GenTrainResult<float> train_generator(const Tensor<float>& images,
                                             const Tensor<float>& reps, const GenConfig& cfg,
                                             const NoiseSchedule& ns, const TrainConfig& tc,
                                             std::uint64_t seed) {
  if (images.rows() == 0) throw UsageError("train_generator needs a nonempty dataset");
  if (images.rows() != reps.rows())
    throw UsageError("representation store misaligned with dataset: " +
                     std::to_string(reps.rows()) + " reps vs " + std::to_string(images.rows()) +
                     " images");
  if (images.cols() != cfg.image_dim) throw ConfigError("image dim does not match generator config");
  if (reps.cols() != cfg.rep_dim) throw ConfigError("rep dim does not match generator config");

  GenTrainResult<float> result;
  Rng init_rng = stream_rng(seed, "gen-init");
  result.net = GenNet<float>::build(cfg, init_rng);
  GenNet<float>& net = result.net;

  auto params = net.params();
  AdamWState<float> opt = AdamWState<float>::init(params);
  const AdamWConfig adamw = tc.adamw();

  Rng noise_rng = stream_rng(seed, "gen-noise");
  Rng order_rng = stream_rng(seed, "gen-order");
  const std::size_t n = images.rows(), p = cfg.image_dim, d = cfg.rep_dim;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += tc.batch_size) {
      const std::size_t b = std::min(tc.batch_size, n - start);
      Tensor<float> xt = Tensor<float>::zeros({b, p});
      Tensor<float> eps = Tensor<float>::zeros({b, p});
      Tensor<float> cond = Tensor<float>::zeros({b, d});
      std::vector<std::size_t> ts(b);
      std::vector<bool> dropped(b);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t src = order[start + i];
        dropped[i] = noise_rng.uniform() < cfg.rep_drop_rate;
        ts[i] = static_cast<std::size_t>(noise_rng.below(ns.timesteps));
        noise_rng.fill_gaussian(eps.row(i), p);
        const double sa = std::sqrt(ns.alpha_bar[ts[i]]);
        const double sn = std::sqrt(1.0 - ns.alpha_bar[ts[i]]);
        const float* img = images.row(src);
        float* xi = xt.row(i);
        const float* ei = eps.row(i);
        for (std::size_t j = 0; j < p; ++j)
          xi[j] = static_cast<float>(sa * pixel_to_signal(static_cast<double>(img[j])) +
                                     sn * static_cast<double>(ei[j]));
        const float* c = dropped[i] ? net.null_embed.data.data() : reps.row(src);
        std::copy(c, c + d, cond.row(i));
      }
      zero_grads(params);
      Tensor<float> pred = net.forward(xt, ts, cond);
      double loss = 0.0;
      Tensor<float> g = Tensor<float>::zeros({b, p});
      for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double diff =
            static_cast<double>(pred.data[i]) - static_cast<double>(eps.data[i]);
        loss += diff * diff;
        g.data[i] = static_cast<float>(2.0 * diff / static_cast<double>(b));
      }
      loss /= static_cast<double>(b);
      if (!std::isfinite(loss))
        throw TrainingError("generator loss diverged at epoch " + std::to_string(epoch));
      Tensor<float> grad_cond = net.backward(g);
      for (std::size_t i = 0; i < b; ++i) {
        if (!dropped[i]) continue;
        const float* gi = grad_cond.row(i);
        for (std::size_t j = 0; j < d; ++j) net.null_embed_grad.data[j] += gi[j];
      }
      adamw_step(params, opt, adamw);
      epoch_loss += loss;
      ++batches;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

}  // namespace rcg

#endif  // RCG_GENERATOR_HPP
