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

#include "rcg/diffusion.hpp"

using rcg::NoiseSchedule;
using rcg::Rng;
using rcg::SamplerConfig;
using rcg::Tensor;

TEST_CASE("single-step schedule is one product") {
  const NoiseSchedule ns = rcg::make_schedule(1, 0.1, 0.2);
  REQUIRE(ns.alpha_bar.size() == 1);
  REQUIRE(ns.alpha_bar[0] == Catch::Approx(0.9).margin(1e-15));
}

TEST_CASE("alpha_bar is strictly decreasing and bounded in (0,1)") {
  const NoiseSchedule ns = rcg::make_schedule(500, 1e-4, 0.02);
  for (std::size_t t = 0; t < ns.timesteps; ++t) {
    REQUIRE(ns.alpha_bar[t] > 0.0);
    REQUIRE(ns.alpha_bar[t] < 1.0);
    if (t > 0) REQUIRE(ns.alpha_bar[t] < ns.alpha_bar[t - 1]);
    REQUIRE(ns.beta[t] > 0.0);
    REQUIRE(ns.beta[t] < 1.0);
  }
}

TEST_CASE("canonical 1000-step schedule endpoint") {
  const NoiseSchedule ns = rcg::make_schedule(1000, 1e-4, 0.02);
  // Independent route: sum of logs instead of a running product.
  double log_sum = 0.0;
  for (std::size_t t = 0; t < 1000; ++t) {
    const double beta = 1e-4 + (0.02 - 1e-4) * static_cast<double>(t) / 999.0;
    log_sum += std::log1p(-beta);
  }
  REQUIRE(ns.alpha_bar[999] == Catch::Approx(std::exp(log_sum)).epsilon(1e-10));
  REQUIRE(ns.alpha_bar[999] == Catch::Approx(4.04e-5).epsilon(0.01));
}

TEST_CASE("invalid beta ranges are configuration errors") {
  REQUIRE_THROWS_AS(rcg::make_schedule(10, 0.0, 0.02), rcg::ConfigError);
  REQUIRE_THROWS_AS(rcg::make_schedule(10, 0.02, 0.0001), rcg::ConfigError);
  REQUIRE_THROWS_AS(rcg::make_schedule(10, 0.1, 1.0), rcg::ConfigError);
  REQUIRE_THROWS_AS(rcg::make_schedule(0, 1e-4, 0.02), rcg::ConfigError);
}

TEST_CASE("timestep embedding anchors") {
  const auto e0 = rcg::timestep_embed<double>(0, 8);
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(e0[i] == 0.0);
    REQUIRE(e0[4 + i] == 1.0);
  }

  const auto e1 = rcg::timestep_embed<double>(1, 4);
  REQUIRE(e1[0] == Catch::Approx(std::sin(1.0)).margin(1e-15));
  REQUIRE(e1[1] == Catch::Approx(std::sin(0.01)).margin(1e-15));
  REQUIRE(e1[2] == Catch::Approx(std::cos(1.0)).margin(1e-15));
  REQUIRE(e1[3] == Catch::Approx(std::cos(0.01)).margin(1e-15));

  REQUIRE_THROWS_AS(rcg::timestep_embed<double>(0, 5), rcg::ConfigError);
}

TEST_CASE("timestep embeddings are distinct across the schedule range") {
  const std::size_t dim = 16;
  for (std::size_t t = 0; t < 1000; t += 37) {
    const auto a = rcg::timestep_embed<double>(t, dim);
    const auto b = rcg::timestep_embed<double>(t + 1, dim);
    REQUIRE(a != b);
  }
}

TEST_CASE("diffuse anchors and formula") {
  NoiseSchedule ns;
  ns.timesteps = 3;
  ns.beta = {0.1, 0.1, 0.1};
  ns.alpha_bar = {1.0, 0.25, 0.0};

  const std::vector<double> z0 = {2.0};
  const std::vector<double> eps = {-2.0};
  REQUIRE(rcg::diffuse(z0, 0, eps, ns)[0] == Catch::Approx(2.0).margin(1e-15));
  REQUIRE(rcg::diffuse(z0, 2, eps, ns)[0] == Catch::Approx(-2.0).margin(1e-15));
  // sqrt(0.25)*2 + sqrt(0.75)*(-2) = 1 - sqrt(3)
  REQUIRE(rcg::diffuse(z0, 1, eps, ns)[0] == Catch::Approx(1.0 - std::sqrt(3.0)).margin(1e-12));
  REQUIRE_THROWS_AS(rcg::diffuse(z0, 3, eps, ns), rcg::UsageError);
}

TEST_CASE("diffuse preserves the schedule's mean and variance mix") {
  const NoiseSchedule ns = rcg::make_schedule(1000, 1e-4, 0.02);
  Rng rng(99);
  const double z0_mean = 1.5, z0_std = 0.5;
  for (std::size_t t : {std::size_t{1}, std::size_t{500}, std::size_t{999}}) {
    const std::size_t n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> z0 = {z0_mean + z0_std * rng.gaussian()};
      const std::vector<double> eps = {rng.gaussian()};
      const double zt = rcg::diffuse(z0, t, eps, ns)[0];
      sum += zt;
      sum_sq += zt * zt;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double expect_mean = std::sqrt(ns.alpha_bar[t]) * z0_mean;
    const double expect_var = ns.alpha_bar[t] * z0_std * z0_std + (1.0 - ns.alpha_bar[t]);
    const double se_mean = std::sqrt(expect_var / n);
    const double se_var = expect_var * std::sqrt(2.0 / (n - 1));
    REQUIRE(std::fabs(mean - expect_mean) < 3.0 * se_mean);
    REQUIRE(std::fabs(var - expect_var) < 3.0 * se_var);
  }
}

TEST_CASE("ddim subsequence is evenly spaced and ends at T-1") {
  const auto ts = rcg::ddim_timesteps(1000, 250);
  REQUIRE(ts.size() == 250);
  REQUIRE(ts.front() == 3);
  REQUIRE(ts.back() == 999);
  for (std::size_t i = 1; i < ts.size(); ++i) REQUIRE(ts[i] - ts[i - 1] == 4);

  // steps == T reduces to every timestep.
  const auto all = rcg::ddim_timesteps(16, 16);
  for (std::size_t i = 0; i < 16; ++i) REQUIRE(all[i] == i);

  REQUIRE_THROWS_AS(rcg::ddim_timesteps(10, 0), rcg::ConfigError);
  REQUIRE_THROWS_AS(rcg::ddim_timesteps(10, 11), rcg::ConfigError);
}

TEST_CASE("eta = 0 sampling is a pure function of the initial noise") {
  const NoiseSchedule ns = rcg::make_schedule(100, 1e-4, 0.05);
  auto eps_fn = [](const Tensor<double>& x, std::size_t, std::size_t) {
    Tensor<double> e = x;
    for (double& v : e.data) v *= 0.1;
    return e;
  };
  SamplerConfig sc{/*ddim_steps=*/25, /*eta=*/0.0, /*seed=*/7};
  std::vector<Rng> rng1{Rng(7)}, rng2{Rng(7)};
  const Tensor<double> a = rcg::ddim_generate<double>(eps_fn, ns, sc, 4, rng1);
  const Tensor<double> b = rcg::ddim_generate<double>(eps_fn, ns, sc, 4, rng2);
  REQUIRE(a.data == b.data);
}

TEST_CASE("a perfect denoiser on a point mass converges to the point") {
  const NoiseSchedule ns = rcg::make_schedule(1000, 1e-4, 0.02);
  const double target = 0.8;
  // Analytic denoiser for z0 always equal to the constant c.
  auto eps_fn = [&](const Tensor<double>& x, std::size_t t, std::size_t) {
    Tensor<double> e = x;
    const double a = ns.alpha_bar[t];
    for (double& v : e.data) v = (v - std::sqrt(a) * target) / std::sqrt(1.0 - a);
    return e;
  };
  for (double eta : {0.0, 1.0}) {
    SamplerConfig sc{/*ddim_steps=*/250, eta, /*seed=*/3};
    std::vector<Rng> rng;
    for (int r = 0; r < 8; ++r) rng.emplace_back(1000 + r);
    const Tensor<double> out = rcg::ddim_generate<double>(eps_fn, ns, sc, 3, rng);
    for (double v : out.data) REQUIRE(v == Catch::Approx(target).margin(1e-3));
  }
}

TEST_CASE("per-row rng streams make row sampling batch-invariant") {
  const NoiseSchedule ns = rcg::make_schedule(50, 1e-3, 0.1);
  auto eps_fn = [](const Tensor<float>& x, std::size_t, std::size_t) {
    Tensor<float> e = x;
    for (float& v : e.data) v *= 0.3f;
    return e;
  };
  SamplerConfig sc{/*ddim_steps=*/10, /*eta=*/1.0, /*seed=*/0};
  std::vector<Rng> batch_rng{Rng(11), Rng(22), Rng(33)};
  const Tensor<float> batch = rcg::ddim_generate<float>(eps_fn, ns, sc, 5, batch_rng);
  std::vector<Rng> solo_rng{Rng(22)};
  const Tensor<float> solo = rcg::ddim_generate<float>(eps_fn, ns, sc, 5, solo_rng);
  for (std::size_t j = 0; j < 5; ++j) REQUIRE(batch.at(1, j) == solo.at(0, j));
}
