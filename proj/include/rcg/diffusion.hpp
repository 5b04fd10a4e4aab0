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

#ifndef RCG_DIFFUSION_HPP
#define RCG_DIFFUSION_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "rcg/rng.hpp"
#include "rcg/tensor.hpp"

namespace rcg {

/// Linear beta schedule and its cumulative signal coefficients alpha_bar.
/// Kept in double precision; products of many near-one factors lose too
/// much accuracy in float.
struct NoiseSchedule {
  std::size_t timesteps = 0;
  std::vector<double> beta;
  std::vector<double> alpha_bar;
};

inline NoiseSchedule make_schedule(std::size_t timesteps, double beta_start, double beta_end) {
  if (timesteps < 1) throw ConfigError("schedule needs at least one timestep");
  if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
    throw ConfigError("schedule requires 0 < beta_start < beta_end < 1");
  NoiseSchedule ns;
  ns.timesteps = timesteps;
  ns.beta.resize(timesteps);
  ns.alpha_bar.resize(timesteps);
  double prod = 1.0;
  for (std::size_t t = 0; t < timesteps; ++t) {
    const double frac = timesteps == 1 ? 0.0
                                       : static_cast<double>(t) / static_cast<double>(timesteps - 1);
    ns.beta[t] = beta_start + (beta_end - beta_start) * frac;
    prod *= 1.0 - ns.beta[t];
    ns.alpha_bar[t] = prod;
  }
  return ns;
}

/// Sinusoidal embedding: half sin(t * w_i), half cos(t * w_i) with
/// w_i = 10000^(-2i/dim).
template <typename T>
std::vector<T> timestep_embed(std::size_t t, std::size_t dim) {
  if (dim % 2 != 0) throw ConfigError("timestep embedding dimension must be even");
  const std::size_t half = dim / 2;
  std::vector<T> out(dim);
  for (std::size_t i = 0; i < half; ++i) {
    const double w = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    const double arg = static_cast<double>(t) * w;
    out[i] = static_cast<T>(std::sin(arg));
    out[half + i] = static_cast<T>(std::cos(arg));
  }
  return out;
}

/// Rows of timestep embeddings for a batch of per-item timesteps.
template <typename T>
Tensor<T> timestep_embed_batch(const std::vector<std::size_t>& ts, std::size_t dim) {
  Tensor<T> out = Tensor<T>::zeros({ts.size(), dim});
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const std::vector<T> e = timestep_embed<T>(ts[i], dim);
    T* dst = out.row(i);
    for (std::size_t j = 0; j < dim; ++j) dst[j] = e[j];
  }
  return out;
}

/// z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps.
/// The noise is supplied by the caller so tests can inject it.
template <typename T>
std::vector<T> diffuse(const std::vector<T>& z0, std::size_t t, const std::vector<T>& eps,
                       const NoiseSchedule& ns) {
  if (t >= ns.timesteps) throw UsageError("diffuse timestep out of range");
  if (z0.size() != eps.size()) throw UsageError("diffuse noise length mismatch");
  const double a = ns.alpha_bar[t];
  const double sa = std::sqrt(a), sn = std::sqrt(1.0 - a);
  std::vector<T> zt(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i)
    zt[i] = static_cast<T>(sa * static_cast<double>(z0[i]) + sn * static_cast<double>(eps[i]));
  return zt;
}

struct SamplerConfig {
  std::size_t ddim_steps = 250;
  double eta = 1.0;
  std::uint64_t seed = 0;
};

/// Evenly spaced sampling subsequence, ascending, always ending at the
/// largest timestep T-1. steps == T yields every timestep.
inline std::vector<std::size_t> ddim_timesteps(std::size_t timesteps, std::size_t steps) {
  if (steps < 1 || steps > timesteps)
    throw ConfigError("ddim steps must lie in [1, timesteps]");
  std::vector<std::size_t> ts(steps);
  for (std::size_t i = 0; i < steps; ++i) ts[i] = ((i + 1) * timesteps) / steps - 1;
  return ts;
}

/// DDIM sampling loop shared by the representation and image models.
///
/// `eps_fn(x, t, step_index)` predicts the noise component for the whole
/// batch at timestep t; step_index counts sampling steps from 0 (most
/// noisy) so callers can schedule guidance along the trajectory. One Rng
/// per row keeps every sample reproducible independent of batch
/// composition. eta = 0 never draws noise, so the result is a pure
/// function of the initial z_T.
template <typename T, typename EpsFn>
Tensor<T> ddim_generate(EpsFn&& eps_fn, const NoiseSchedule& ns, const SamplerConfig& sc,
                        std::size_t dim, std::vector<Rng>& row_rng) {
  if (!(sc.eta >= 0.0 && sc.eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  const std::vector<std::size_t> ts = ddim_timesteps(ns.timesteps, sc.ddim_steps);
  const std::size_t n = row_rng.size();

  Tensor<T> x = Tensor<T>::zeros({n, dim});
  for (std::size_t r = 0; r < n; ++r) row_rng[r].fill_gaussian(x.row(r), dim);

  for (std::size_t k = 0; k < ts.size(); ++k) {
    const std::size_t idx = ts.size() - 1 - k;  // walk the subsequence downward
    const std::size_t t = ts[idx];
    const double a_t = ns.alpha_bar[t];
    const double a_prev = idx == 0 ? 1.0 : ns.alpha_bar[ts[idx - 1]];
    const double sigma =
        sc.eta * std::sqrt((1.0 - a_prev) / (1.0 - a_t)) * std::sqrt(1.0 - a_t / a_prev);
    const double dir_coef_sq = 1.0 - a_prev - sigma * sigma;
    const double dir_coef = std::sqrt(dir_coef_sq > 0.0 ? dir_coef_sq : 0.0);
    const double inv_sqrt_a_t = 1.0 / std::sqrt(a_t);
    const double sqrt_one_minus_a_t = std::sqrt(1.0 - a_t);

    const Tensor<T> eps = eps_fn(x, t, k);
    for (std::size_t r = 0; r < n; ++r) {
      T* xr = x.row(r);
      const T* er = eps.row(r);
      for (std::size_t j = 0; j < dim; ++j) {
        const double e = static_cast<double>(er[j]);
        const double z0_hat =
            (static_cast<double>(xr[j]) - sqrt_one_minus_a_t * e) * inv_sqrt_a_t;
        double next = std::sqrt(a_prev) * z0_hat + dir_coef * e;
        if (sigma > 0.0) next += sigma * row_rng[r].gaussian();
        xr[j] = static_cast<T>(next);
      }
    }
  }
  return x;
}

}  // namespace rcg

#endif  // RCG_DIFFUSION_HPP
