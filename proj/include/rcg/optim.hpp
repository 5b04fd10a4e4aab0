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

#ifndef RCG_OPTIM_HPP
#define RCG_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rcg/layers.hpp"

namespace rcg {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// First/second moment accumulators aligned with a parameter list, plus the
/// step counter used for bias correction.
template <typename T>
struct AdamWState {
  std::vector<Tensor<T>> m, v;
  std::int64_t step = 0;

  static AdamWState init(const std::vector<ParamRef<T>>& params) {
    AdamWState st;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const auto& p : params) {
      st.m.push_back(Tensor<T>::zeros(p.value->shape));
      st.v.push_back(Tensor<T>::zeros(p.value->shape));
    }
    return st;
  }
};

/// One AdamW update with decoupled weight decay (decay applied directly to
/// the parameters, scaled by lr). The step counter is incremented before
/// bias correction.
template <typename T>
void adamw_step(const std::vector<ParamRef<T>>& params, AdamWState<T>& state,
                const AdamWConfig& cfg) {
  if (params.size() != state.m.size())
    throw UsageError("adamw state does not match parameter list");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<T>& value = *params[p].value;
    const Tensor<T>& grad = *params[p].grad;
    if (!value.same_shape(grad))
      throw UsageError("gradient shape mismatch for " + params[p].name);
    if (!all_finite(grad))
      throw TrainingError("non-finite gradient in " + params[p].name + " at step " +
                          std::to_string(state.step));
    Tensor<T>& m = state.m[p];
    Tensor<T>& v = state.v[p];
    for (std::size_t i = 0; i < value.data.size(); ++i) {
      const T g = grad.data[i];
      m.data[i] = static_cast<T>(cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g);
      v.data[i] = static_cast<T>(cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g * g);
      const double mhat = static_cast<double>(m.data[i]) / bc1;
      const double vhat = static_cast<double>(v.data[i]) / bc2;
      const double step_dir = mhat / (std::sqrt(vhat) + cfg.eps);
      value.data[i] = static_cast<T>(
          static_cast<double>(value.data[i]) -
          cfg.lr * (step_dir + cfg.weight_decay * static_cast<double>(value.data[i])));
    }
  }
}

/// Shared per-stage training hyperparameters.
struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::string lr_schedule = "constant";  // {constant, cosine}

  /// Per-step learning rate; cosine decays from lr to ~0 over the run.
  double lr_at(std::size_t step, std::size_t total_steps) const {
    if (lr_schedule == "constant") return lr;
    if (lr_schedule == "cosine") {
      if (total_steps <= 1) return lr;
      const double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
      return lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
    }
    throw ConfigError("unknown lr_schedule '" + lr_schedule + "'");
  }

  AdamWConfig adamw(std::size_t step = 0, std::size_t total_steps = 0) const {
    return {total_steps == 0 ? lr : lr_at(step, total_steps), beta1, beta2, 1e-8, weight_decay};
  }
};

}  // namespace rcg

#endif  // RCG_OPTIM_HPP
