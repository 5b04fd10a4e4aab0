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

#ifndef RCG_VERIFY_HPP
#define RCG_VERIFY_HPP

#include <string>
#include <vector>

#include "rcg/gradcheck.hpp"
#include "rcg/generator.hpp"
#include "rcg/rdm.hpp"

namespace rcg {

struct ComponentCheck {
  std::string component;
  GradCheckReport report;
};

namespace detail {

template <typename Layer>
ComponentCheck check_single_layer(const std::string& name, Layer layer,
                                  std::vector<ParamRef<double>> params, std::size_t batch,
                                  std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  Tensor<double> x = Tensor<double>::zeros({batch, in_dim});
  rng.fill_gaussian(x.data.data(), x.size());
  Tensor<double> gx = Tensor<double>::zeros({batch, in_dim});
  Tensor<double> contraction = Tensor<double>::zeros({batch, out_dim});
  rng.fill_gaussian(contraction.data.data(), contraction.size());
  params.push_back({"input", &x, &gx});

  auto loss_fn = [&]() {
    Layer probe = layer;
    const Tensor<double> y = probe.forward(x);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) loss += y.data[i] * contraction.data[i];
    return loss;
  };
  zero_grads(params);
  layer.forward(x);
  gx = layer.backward(contraction);
  return {name, finite_diff_check(params, loss_fn)};
}

inline double rdm_fixed_loss(RdmNet<double>& net, const Tensor<double>& zt,
                             const std::vector<std::size_t>& ts, const Tensor<double>& eps,
                             bool with_grad) {
  Tensor<double> pred = net.forward(zt, ts);
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(zt.rows());
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double diff = pred.data[i] - eps.data[i];
    loss += diff * diff;
  }
  loss *= inv_b;
  if (with_grad) {
    Tensor<double> g = pred;
    for (std::size_t i = 0; i < g.data.size(); ++i)
      g.data[i] = 2.0 * (pred.data[i] - eps.data[i]) * inv_b;
    net.backward(g);
  }
  return loss;
}

}  // namespace detail

/// Finite-difference verification of every analytic backward pass: the
/// standalone layers, a full representation-model block at C = 8, and a
/// generator block with both a live representation and the null embedding
/// on the conditioning path. Double precision, h = 1e-5.
inline std::vector<ComponentCheck> run_gradient_checks() {
  std::vector<ComponentCheck> checks;
  Rng rng(0x5eedf00d);

  {
    Affine<double> layer = Affine<double>::make(5, 4, rng);
    std::vector<ParamRef<double>> params;
    layer.collect("affine", params);
    checks.push_back(detail::check_single_layer("affine", layer, params, 3, 5, 4, rng));
  }
  {
    LayerNorm<double> layer = LayerNorm<double>::make(6);
    for (double& v : layer.gamma.data) v = 1.0 + 0.3 * rng.gaussian();
    for (double& v : layer.beta.data) v = 0.2 * rng.gaussian();
    std::vector<ParamRef<double>> params;
    layer.collect("layer_norm", params);
    checks.push_back(detail::check_single_layer("layer_norm", layer, params, 3, 6, 6, rng));
  }
  {
    Silu<double> layer;
    checks.push_back(detail::check_single_layer("silu", layer, {}, 3, 7, 7, rng));
  }

  {
    // Full residual block inside a one-block representation model at C = 8,
    // driven by the actual denoising loss.
    RdmConfig cfg;
    cfg.num_blocks = 1;
    cfg.hidden_dim = 8;
    cfg.rep_dim = 4;
    cfg.timestep_embed_dim = 4;
    RdmNet<double> net = RdmNet<double>::build(cfg, rng);
    kaiming_uniform(net.core.output_layer.lin.w, cfg.hidden_dim, rng);

    const std::size_t b = 3;
    Tensor<double> zt = Tensor<double>::zeros({b, cfg.rep_dim});
    Tensor<double> eps = Tensor<double>::zeros({b, cfg.rep_dim});
    rng.fill_gaussian(zt.data.data(), zt.size());
    rng.fill_gaussian(eps.data.data(), eps.size());
    const std::vector<std::size_t> ts = {0, 300, 999};

    auto params = net.params();
    zero_grads(params);
    detail::rdm_fixed_loss(net, zt, ts, eps, /*with_grad=*/true);
    auto loss_fn = [&]() {
      RdmNet<double> probe = net;
      return detail::rdm_fixed_loss(probe, zt, ts, eps, /*with_grad=*/false);
    };
    checks.push_back({"rdm_block", finite_diff_check(params, loss_fn)});
  }

  {
    // Generator block with the conditioning pathway: row 0 conditions on a
    // representation, row 1 on the null embedding, so its gradient is
    // exercised too.
    GenConfig cfg;
    cfg.image_dim = 6;
    cfg.hidden_dim = 8;
    cfg.num_blocks = 1;
    cfg.rep_dim = 4;
    cfg.timestep_embed_dim = 4;
    GenNet<double> net = GenNet<double>::build(cfg, rng);
    kaiming_uniform(net.core.output_layer.lin.w, cfg.hidden_dim, rng);

    const std::size_t b = 2;
    Tensor<double> xt = Tensor<double>::zeros({b, cfg.image_dim});
    Tensor<double> eps = Tensor<double>::zeros({b, cfg.image_dim});
    Tensor<double> rep = Tensor<double>::zeros({1, cfg.rep_dim});
    rng.fill_gaussian(xt.data.data(), xt.size());
    rng.fill_gaussian(eps.data.data(), eps.size());
    rng.fill_gaussian(rep.data.data(), rep.size());
    const std::vector<std::size_t> ts = {10, 900};

    auto run = [&](GenNet<double>& model, bool with_grad) {
      Tensor<double> cond = Tensor<double>::zeros({b, cfg.rep_dim});
      std::copy(rep.data.begin(), rep.data.end(), cond.row(0));
      std::copy(model.null_embed.data.begin(), model.null_embed.data.end(), cond.row(1));
      Tensor<double> pred = model.forward(xt, ts, cond);
      double loss = 0.0;
      const double inv_b = 1.0 / static_cast<double>(b);
      for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double diff = pred.data[i] - eps.data[i];
        loss += diff * diff;
      }
      loss *= inv_b;
      if (with_grad) {
        Tensor<double> g = pred;
        for (std::size_t i = 0; i < g.data.size(); ++i)
          g.data[i] = 2.0 * (pred.data[i] - eps.data[i]) * inv_b;
        const Tensor<double> grad_cond = model.backward(g);
        for (std::size_t j = 0; j < cfg.rep_dim; ++j)
          model.null_embed_grad.data[j] += grad_cond.at(1, j);
      }
      return loss;
    };

    auto params = net.params();
    zero_grads(params);
    run(net, /*with_grad=*/true);
    auto loss_fn = [&]() {
      GenNet<double> probe = net;
      return run(probe, /*with_grad=*/false);
    };
    checks.push_back({"generator_block", finite_diff_check(params, loss_fn)});
  }

  return checks;
}

}  // namespace rcg

#endif  // RCG_VERIFY_HPP
