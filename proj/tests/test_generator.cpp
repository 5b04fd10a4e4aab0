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

#include <catch2/catch_amalgamated.hpp>

#include "rcg/dataset.hpp"
#include "rcg/generator.hpp"

using rcg::GenConfig;
using rcg::GenNet;
using rcg::GuidanceConfig;
using rcg::NoiseSchedule;
using rcg::Rng;
using rcg::SamplerConfig;
using rcg::Tensor;

namespace {

GenConfig tiny_config() {
  GenConfig cfg;
  cfg.image_dim = 16;  // 4x4
  cfg.hidden_dim = 12;
  cfg.num_blocks = 2;
  cfg.rep_dim = 4;
  cfg.timestep_embed_dim = 6;
  return cfg;
}

}  // namespace

TEST_CASE("guided_prediction anchors") {
  Tensor<double> pc({1, 3}, {1.0, 2.0, -1.0});
  Tensor<double> pu({1, 3}, {0.5, 2.0, 1.0});

  const Tensor<double> tau0 = rcg::guided_prediction(pc, pu, 0.0);
  REQUIRE(tau0.data == pc.data);

  const Tensor<double> tau1 = rcg::guided_prediction(pc, pu, 1.0);
  for (std::size_t i = 0; i < 3; ++i)
    REQUIRE(tau1.data[i] == Catch::Approx(2.0 * pc.data[i] - pu.data[i]).margin(1e-15));

  // Equal predictions: guidance vanishes for every tau.
  for (double tau : {0.0, 0.7, 3.0, 11.0}) {
    const Tensor<double> same = rcg::guided_prediction(pc, pc, tau);
    REQUIRE(same.data == pc.data);
  }

  // Affine in tau.
  Rng rng(61);
  Tensor<double> a = Tensor<double>::zeros({2, 4}), b = Tensor<double>::zeros({2, 4});
  rng.fill_gaussian(a.data.data(), a.size());
  rng.fill_gaussian(b.data.data(), b.size());
  const auto g1 = rcg::guided_prediction(a, b, 1.0);
  const auto g2 = rcg::guided_prediction(a, b, 2.0);
  const auto g3 = rcg::guided_prediction(a, b, 3.0);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    REQUIRE(g3.data[i] - g2.data[i] == Catch::Approx(g2.data[i] - g1.data[i]).margin(1e-12));
}

TEST_CASE("guidance schedule anchors") {
  REQUIRE(rcg::guidance_schedule(6.0, 0, 4, "linear") == 0.0);
  REQUIRE(rcg::guidance_schedule(6.0, 3, 4, "linear") == 6.0);
  REQUIRE(rcg::guidance_schedule(6.0, 1, 4, "linear") == Catch::Approx(2.0).margin(1e-15));
  REQUIRE(rcg::guidance_schedule(6.0, 2, 4, "linear") == Catch::Approx(4.0).margin(1e-15));
  for (std::size_t i = 0; i < 5; ++i) REQUIRE(rcg::guidance_schedule(2.5, i, 5, "constant") == 2.5);
  REQUIRE_THROWS_AS(rcg::guidance_schedule(1.0, 0, 1, "linear"), rcg::ConfigError);
  REQUIRE_THROWS_AS(rcg::guidance_schedule(1.0, 4, 4, "linear"), rcg::UsageError);
}

TEST_CASE("zero-initialized generator predicts zero noise") {
  Rng rng(62);
  GenNet<double> net = GenNet<double>::build(tiny_config(), rng);
  Tensor<double> x = Tensor<double>::zeros({2, 16});
  rng.fill_gaussian(x.data.data(), x.size());
  Tensor<double> cond = Tensor<double>::zeros({2, 4});
  const Tensor<double> out = net.forward(x, {3, 7}, cond);
  for (double v : out.data) REQUIRE(v == 0.0);
}

TEST_CASE("different conditions change a live generator's output") {
  Rng rng(63);
  GenNet<double> net = GenNet<double>::build(tiny_config(), rng);
  rcg::kaiming_uniform(net.core.output_layer.lin.w, net.cfg.hidden_dim, rng);
  Tensor<double> x = Tensor<double>::zeros({1, 16});
  rng.fill_gaussian(x.data.data(), x.size());
  Tensor<double> rep_a = Tensor<double>::zeros({1, 4});
  Tensor<double> rep_b = Tensor<double>::zeros({1, 4});
  rng.fill_gaussian(rep_a.data.data(), rep_a.size());
  rng.fill_gaussian(rep_b.data.data(), rep_b.size());
  const Tensor<double> ya = net.forward(x, {5}, rep_a);
  const Tensor<double> yb = net.forward(x, {5}, rep_b);
  REQUIRE(ya.data != yb.data);
}

TEST_CASE("conditioning pathway parameters are exactly the rep projections") {
  const GenConfig cfg = tiny_config();
  const std::size_t expect =
      cfg.num_blocks * (cfg.rep_dim * cfg.hidden_dim + cfg.hidden_dim) + cfg.rep_dim;
  REQUIRE(rcg::gen_conditioning_param_count(cfg) == expect);
  Rng rng(64);
  GenNet<double> net = GenNet<double>::build(cfg, rng);
  std::size_t enumerated = 0;
  for (const auto& p : net.params()) enumerated += p.value->size();
  REQUIRE(rcg::gen_param_count(cfg) == enumerated);
}

TEST_CASE("pixel mapping round trip and clamping") {
  REQUIRE(rcg::pixel_to_signal(0.0) == -1.0);
  REQUIRE(rcg::pixel_to_signal(1.0) == 1.0);
  REQUIRE(rcg::signal_to_pixel(-3.0) == 0.0);
  REQUIRE(rcg::signal_to_pixel(3.0) == 1.0);
  REQUIRE(rcg::signal_to_pixel(0.0) == 0.5);
}

TEST_CASE("tau = 0 sampling equals the unguided path bit-exactly") {
  Rng rng(65);
  GenNet<float> net = GenNet<float>::build(tiny_config(), rng);
  rcg::kaiming_uniform(net.core.output_layer.lin.w, net.cfg.hidden_dim, rng);
  const NoiseSchedule ns = rcg::make_schedule(40, 1e-3, 0.05);
  SamplerConfig sc{/*ddim_steps=*/8, /*eta=*/1.0, /*seed=*/0};
  Tensor<float> reps = Tensor<float>::zeros({2, 4});
  rng.fill_gaussian(reps.data.data(), reps.size());

  GuidanceConfig off;  // tau = 0, linear
  GuidanceConfig constant_off{0.0, "constant"};
  std::vector<Rng> rng1{Rng(5), Rng(6)}, rng2{Rng(5), Rng(6)};
  const Tensor<float> a = rcg::sample_images(net, reps, ns, sc, off, rng1);
  const Tensor<float> b = rcg::sample_images(net, reps, ns, sc, constant_off, rng2);
  REQUIRE(a.data == b.data);
  for (float v : a.data) {
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 1.0f);
  }

  // Determinism: same rep and seed give the same image.
  std::vector<Rng> rng3{Rng(5), Rng(6)};
  const Tensor<float> c = rcg::sample_images(net, reps, ns, sc, off, rng3);
  REQUIRE(a.data == c.data);
}

TEST_CASE("guided sampling runs with an untrained null embedding") {
  Rng rng(66);
  GenConfig cfg = tiny_config();
  cfg.rep_drop_rate = 0.0;
  GenNet<float> net = GenNet<float>::build(cfg, rng);
  const NoiseSchedule ns = rcg::make_schedule(40, 1e-3, 0.05);
  SamplerConfig sc{/*ddim_steps=*/8, /*eta=*/1.0, /*seed=*/0};
  GuidanceConfig gc{3.0, "linear"};
  Tensor<float> reps = Tensor<float>::zeros({1, 4});
  rng.fill_gaussian(reps.data.data(), reps.size());
  std::vector<Rng> rows{Rng(9)};
  const Tensor<float> img = rcg::sample_images(net, reps, ns, sc, gc, rows);
  REQUIRE(rcg::all_finite(img));
}

TEST_CASE("train_generator drop-rate edge cases") {
  rcg::Dataset ds = rcg::make_shapes(2, 10, 8, 19);
  GenConfig cfg = tiny_config();
  cfg.image_dim = 64;
  const NoiseSchedule ns = rcg::make_schedule(30, 1e-3, 0.05);
  rcg::TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  Tensor<float> reps = Tensor<float>::zeros({ds.size(), 4});
  Rng rng(67);
  rng.fill_gaussian(reps.data.data(), reps.size());

  // Misaligned store is a usage error.
  Tensor<float> short_reps = Tensor<float>::zeros({3, 4});
  REQUIRE_THROWS_AS(rcg::train_generator(ds.items, short_reps, cfg, ns, tc, 1), rcg::UsageError);

  // rep_drop_rate = 0: the null embedding sees no gradient, only decay.
  GenConfig keep = cfg;
  keep.rep_drop_rate = 0.0;
  rcg::TrainConfig nodecay = tc;
  nodecay.weight_decay = 0.0;
  auto kept = rcg::train_generator(ds.items, reps, keep, ns, nodecay, 5);
  Rng init_rng = rcg::stream_rng(5, "gen-init");
  GenNet<float> reference = GenNet<float>::build(keep, init_rng);
  REQUIRE(kept.net.null_embed.data == reference.null_embed.data);

  // rep_drop_rate = 1: trains, and the null embedding moves.
  GenConfig drop = cfg;
  drop.rep_drop_rate = 1.0;
  auto dropped = rcg::train_generator(ds.items, reps, drop, ns, nodecay, 5);
  REQUIRE(dropped.net.null_embed.data != reference.null_embed.data);

  // Same seed twice: bit-identical checkpoints.
  auto again = rcg::train_generator(ds.items, reps, drop, ns, nodecay, 5);
  auto p1 = dropped.net.params();
  auto p2 = again.net.params();
  for (std::size_t i = 0; i < p1.size(); ++i) REQUIRE(p1[i].value->data == p2[i].value->data);
}
