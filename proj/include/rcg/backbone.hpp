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

#ifndef RCG_BACKBONE_HPP
#define RCG_BACKBONE_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcg/diffusion.hpp"
#include "rcg/layers.hpp"

namespace rcg {

/// Residual fully-connected block: two LayerNorm->SiLU->Linear layers at
/// hidden width C, an identity skip, and per-block linear projections that
/// add the timestep embedding (and an optional conditioning vector) to the
/// hidden activation between the two layers.
template <typename T>
struct ResBlock {
  FcLayer<T> in_layer;   // C -> C
  Affine<T> emb_proj;    // temb_dim -> C
  std::optional<Affine<T>> cond_proj;  // cond_dim -> C, present iff conditioned
  FcLayer<T> out_layer;  // C -> C

  static ResBlock make(std::size_t hidden, std::size_t temb_dim, std::size_t cond_dim, Rng& rng) {
    ResBlock b;
    b.in_layer = FcLayer<T>::make(hidden, hidden, rng);
    b.emb_proj = Affine<T>::make(temb_dim, hidden, rng);
    if (cond_dim > 0) b.cond_proj = Affine<T>::make(cond_dim, hidden, rng);
    b.out_layer = FcLayer<T>::make(hidden, hidden, rng);
    return b;
  }

  Tensor<T> forward(const Tensor<T>& h, const Tensor<T>& emb, const Tensor<T>* cond) {
    Tensor<T> u = in_layer.forward(h);
    add_inplace(u, emb_proj.forward(emb));
    if (cond_proj) {
      if (!cond) throw UsageError("conditioned block called without a conditioning vector");
      add_inplace(u, cond_proj->forward(*cond));
    }
    Tensor<T> v = out_layer.forward(u);
    add_inplace(v, h);  // identity skip
    return v;
  }

  /// Returns {grad_h, grad_cond}. The timestep embedding is sinusoidal
  /// (untrainable), so its input gradient is skipped.
  std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& grad_out) {
    Tensor<T> gu = out_layer.backward(grad_out);
    Tensor<T> grad_cond;
    if (cond_proj) grad_cond = cond_proj->backward(gu);
    emb_proj.backward(gu, /*need_grad_in=*/false);
    Tensor<T> gh = in_layer.backward(gu);
    add_inplace(gh, grad_out);  // skip path
    return {std::move(gh), std::move(grad_cond)};
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    in_layer.collect(prefix + ".in_layer", out);
    emb_proj.collect(prefix + ".emb_proj", out);
    if (cond_proj) cond_proj->collect(prefix + ".cond_proj", out);
    out_layer.collect(prefix + ".out_layer", out);
  }
};

/// Shared noise-prediction backbone: an input projection to hidden width,
/// N residual fc blocks fed the projected timestep embedding (plus an
/// optional conditioning vector), and an output Layer back to the data
/// dimension whose linear is zero-initialized.
template <typename T>
struct CondMlp {
  std::size_t data_dim = 0, hidden = 0, temb_dim = 0, cond_dim = 0;
  Affine<T> input_proj;  // data_dim -> hidden
  std::vector<ResBlock<T>> blocks;
  FcLayer<T> output_layer;  // hidden -> data_dim, zero linear

  static CondMlp make(std::size_t data_dim, std::size_t hidden, std::size_t num_blocks,
                      std::size_t temb_dim, std::size_t cond_dim, Rng& rng) {
    if (num_blocks < 1) throw ConfigError("backbone needs at least one block");
    if (hidden < 2) throw ConfigError("hidden width must be >= 2");
    if (temb_dim < 2 || temb_dim % 2 != 0)
      throw ConfigError("timestep embedding dim must be even and >= 2");
    CondMlp net;
    net.data_dim = data_dim;
    net.hidden = hidden;
    net.temb_dim = temb_dim;
    net.cond_dim = cond_dim;
    net.input_proj = Affine<T>::make(data_dim, hidden, rng);
    net.blocks.reserve(num_blocks);
    for (std::size_t i = 0; i < num_blocks; ++i)
      net.blocks.push_back(ResBlock<T>::make(hidden, temb_dim, cond_dim, rng));
    net.output_layer = FcLayer<T>::make(hidden, data_dim, rng, /*zero_linear=*/true);
    return net;
  }

  /// x [B, data_dim], ts one timestep per row, cond [B, cond_dim] or null.
  Tensor<T> forward(const Tensor<T>& x, const std::vector<std::size_t>& ts, const Tensor<T>* cond) {
    if (x.rows() != ts.size()) throw UsageError("one timestep per batch row required");
    if (cond_dim > 0) {
      if (!cond) throw UsageError("conditioned backbone called without a condition");
      if (cond->rows() != x.rows() || cond->cols() != cond_dim)
        throw ConfigError("condition shape mismatch: " + shape_str(cond->shape));
    }
    const Tensor<T> emb = timestep_embed_batch<T>(ts, temb_dim);
    Tensor<T> h = input_proj.forward(x);
    for (auto& b : blocks) h = b.forward(h, emb, cond);
    return output_layer.forward(h);
  }

  /// Accumulates parameter gradients; returns grad wrt the condition rows
  /// (empty when unconditioned).
  Tensor<T> backward(const Tensor<T>& grad_out) {
    Tensor<T> g = output_layer.backward(grad_out);
    Tensor<T> grad_cond;
    for (std::size_t i = blocks.size(); i-- > 0;) {
      auto [gh, gc] = blocks[i].backward(g);
      g = std::move(gh);
      if (cond_dim > 0) {
        if (grad_cond.empty())
          grad_cond = std::move(gc);
        else
          add_inplace(grad_cond, gc);
      }
    }
    input_proj.backward(g, /*need_grad_in=*/false);
    return grad_cond;
  }

  void collect(std::vector<ParamRef<T>>& out) {
    input_proj.collect("input_proj", out);
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].collect("blocks." + std::to_string(i), out);
    output_layer.collect("output_layer", out);
  }
};

/// Tensor names/shapes of a CondMlp without building one; single source of
/// truth for exact parameter counts at any scale.
inline std::vector<std::pair<std::string, std::vector<std::size_t>>> cond_mlp_tensor_spec(
    std::size_t data_dim, std::size_t hidden, std::size_t num_blocks, std::size_t temb_dim,
    std::size_t cond_dim) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> spec;
  auto affine = [&spec](const std::string& p, std::size_t in, std::size_t out) {
    spec.push_back({p + ".w", {in, out}});
    spec.push_back({p + ".b", {out}});
  };
  auto fc_layer = [&spec, &affine](const std::string& p, std::size_t in, std::size_t out) {
    spec.push_back({p + ".norm.gamma", {in}});
    spec.push_back({p + ".norm.beta", {in}});
    affine(p + ".lin", in, out);
  };
  affine("input_proj", data_dim, hidden);
  for (std::size_t i = 0; i < num_blocks; ++i) {
    const std::string p = "blocks." + std::to_string(i);
    fc_layer(p + ".in_layer", hidden, hidden);
    affine(p + ".emb_proj", temb_dim, hidden);
    if (cond_dim > 0) affine(p + ".cond_proj", cond_dim, hidden);
    fc_layer(p + ".out_layer", hidden, hidden);
  }
  fc_layer("output_layer", hidden, data_dim);
  return spec;
}

}  // namespace rcg

#endif  // RCG_BACKBONE_HPP
