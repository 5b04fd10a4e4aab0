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
#include "rcg/encoder.hpp"
#include "rcg/gradcheck.hpp"

using rcg::EncoderConfig;
using rcg::EncoderNet;
using rcg::Representation;
using rcg::Rng;
using rcg::Tensor;

TEST_CASE("normalize_rep anchors") {
  const Representation<double> r = rcg::normalize_rep(std::vector<double>{0.0, 2.0});
  REQUIRE(r.values[0] == Catch::Approx(-1.0).margin(1e-12));
  REQUIRE(r.values[1] == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(r.normalized);

  REQUIRE_THROWS_AS(rcg::normalize_rep(std::vector<double>{5.0, 5.0, 5.0}),
                    rcg::DegenerateRepresentationError);
}

TEST_CASE("normalize_rep is idempotent and affine-covariant") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(16);
    for (double& x : v) x = rng.gaussian() * 3.0 + 1.0;
    const auto once = rcg::normalize_rep(v);
    const auto twice = rcg::normalize_rep(once.values);
    double mean = 0.0, var = 0.0;
    for (double x : once.values) mean += x;
    mean /= 16.0;
    for (double x : once.values) var += (x - mean) * (x - mean);
    var /= 16.0;
    REQUIRE(std::fabs(mean) < 1e-5);
    REQUIRE(std::fabs(var - 1.0) < 1e-4);
    for (std::size_t i = 0; i < v.size(); ++i)
      REQUIRE(twice.values[i] == Catch::Approx(once.values[i]).margin(1e-6));

    // normalize(a*v + b) = sign(a) * normalize(v)
    const double a = rng.uniform() < 0.5 ? -2.5 : 1.7;
    const double b = rng.gaussian();
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
    const auto scaled = rcg::normalize_rep(w);
    const double sign = a > 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      REQUIRE(scaled.values[i] == Catch::Approx(sign * once.values[i]).margin(1e-9));
  }
}

TEST_CASE("augment with no noise and no shift is the identity") {
  Rng rng(42);
  std::vector<float> img(16);
  for (float& p : img) p = static_cast<float>(rng.uniform());
  const auto out = rcg::augment(img, 4, 4, 0.0, 0, rng);
  REQUIRE(out == img);
}

TEST_CASE("augment is deterministic under the same stream") {
  std::vector<float> img(64, 0.5f);
  Rng a(7), b(7);
  const auto va = rcg::augment(img, 8, 8, 0.1, 2, a);
  const auto vb = rcg::augment(img, 8, 8, 0.1, 2, b);
  REQUIRE(va == vb);
}

TEST_CASE("radius-1 shift moves a one-hot pixel by at most one per axis") {
  // All nine shift outcomes, exhaustively.
  std::vector<float> img(25, 0.0f);
  img[2 * 5 + 2] = 1.0f;
  std::vector<std::pair<int, int>> seen;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(seed);
    const auto out = rcg::augment(img, 5, 5, 0.0, 1, rng);
    int lit = -1;
    for (int i = 0; i < 25; ++i)
      if (out[i] == 1.0f) {
        REQUIRE(lit == -1);
        lit = i;
      }
    REQUIRE(lit >= 0);
    const int dy = lit / 5 - 2, dx = lit % 5 - 2;
    REQUIRE(std::abs(dy) <= 1);
    REQUIRE(std::abs(dx) <= 1);
    if (std::find(seen.begin(), seen.end(), std::make_pair(dy, dx)) == seen.end())
      seen.emplace_back(dy, dx);
  }
  REQUIRE(seen.size() == 9);  // every outcome reachable
}

TEST_CASE("zero-initialized head maps everything to zero") {
  EncoderConfig cfg;
  cfg.input_dim = 8;
  cfg.hidden_dims = {6};
  cfg.projection_dim = 4;
  Rng rng(43);
  EncoderNet<double> net = EncoderNet<double>::build(cfg, rng);
  net.linears.back().w.fill(0.0);
  net.linears.back().b.fill(0.0);
  Tensor<double> x = Tensor<double>::zeros({3, 8});
  rng.fill_gaussian(x.data.data(), x.size());
  const Tensor<double> y = net.forward(x);
  for (double v : y.data) REQUIRE(v == 0.0);
}

TEST_CASE("encode is deterministic and matches the layer-by-layer oracle") {
  EncoderConfig cfg;
  cfg.input_dim = 5;
  cfg.hidden_dims = {4, 3};
  cfg.projection_dim = 2;
  Rng rng(44);
  EncoderNet<double> net = EncoderNet<double>::build(cfg, rng);
  std::vector<double> item(5);
  rng.fill_gaussian(item.data(), item.size());

  const auto rep1 = rcg::encode(net, item);
  const auto rep2 = rcg::encode(net, item);
  REQUIRE(rep1.values == rep2.values);
  REQUIRE_FALSE(rep1.normalized);

  // Composition of affine/silu primitives, chained by hand.
  Tensor<double> h({1, 5}, item);
  for (std::size_t l = 0; l + 1 < net.linears.size(); ++l) {
    Tensor<double> z = Tensor<double>::zeros({1, net.linears[l].out_dim()});
    for (std::size_t j = 0; j < z.cols(); ++j) {
      double acc = net.linears[l].b.data[j];
      for (std::size_t k = 0; k < h.cols(); ++k) acc += h.at(0, k) * net.linears[l].w.at(k, j);
      z.at(0, j) = rcg::silu_value(acc);
    }
    h = z;
  }
  for (std::size_t j = 0; j < 2; ++j) {
    double acc = net.linears.back().b.data[j];
    for (std::size_t k = 0; k < h.cols(); ++k) acc += h.at(0, k) * net.linears.back().w.at(k, j);
    REQUIRE(rep1.values[j] == Catch::Approx(acc).margin(1e-12));
  }

  Tensor<double> bad = Tensor<double>::zeros({1, 7});
  REQUIRE_THROWS_AS(net.forward(bad), rcg::ConfigError);
}

TEST_CASE("info_nce anchors") {
  // N = 1: the denominator holds only the positive, so the loss is 0.
  Tensor<double> a({1, 3}, {1.0, 0.0, 0.0});
  Tensor<double> b({1, 3}, {0.5, 0.5, 0.0});
  REQUIRE(rcg::info_nce_loss(a, b, 0.7) == Catch::Approx(0.0).margin(1e-12));

  // N = 2, aligned positives, orthogonal cross pairs, temperature 1:
  // every anchor contributes -log(e / (e + 2)).
  Tensor<double> va({2, 4}, {1.0, 0.0, 0.0, 0.0,
                             0.0, 1.0, 0.0, 0.0});
  Tensor<double> vb({2, 4}, {1.0, 0.0, 0.0, 0.0,
                             0.0, 1.0, 0.0, 0.0});
  const double expect = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
  REQUIRE(rcg::info_nce_loss(va, vb, 1.0) == Catch::Approx(expect).margin(1e-12));

  // Scale invariance through the internal L2 normalization.
  Tensor<double> va10 = va, vb10 = vb;
  for (double& v : va10.data) v *= 10.0;
  for (double& v : vb10.data) v *= 10.0;
  REQUIRE(rcg::info_nce_loss(va10, vb10, 1.0) ==
          Catch::Approx(rcg::info_nce_loss(va, vb, 1.0)).margin(1e-12));

  REQUIRE_THROWS_AS(rcg::info_nce_loss(Tensor<double>(), Tensor<double>(), 1.0), rcg::UsageError);
}

TEST_CASE("info_nce is non-negative on random batches") {
  Rng rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    Tensor<double> a = Tensor<double>::zeros({n, 6});
    Tensor<double> b = Tensor<double>::zeros({n, 6});
    rng.fill_gaussian(a.data.data(), a.size());
    rng.fill_gaussian(b.data.data(), b.size());
    REQUIRE(rcg::info_nce_loss(a, b, 0.2) >= 0.0);
  }
}

TEST_CASE("info_nce gradient matches finite differences") {
  Rng rng(46);
  const std::size_t n = 3, d = 4;
  Tensor<double> emb = Tensor<double>::zeros({2 * n, d});
  rng.fill_gaussian(emb.data.data(), emb.size());
  Tensor<double> grad_storage = Tensor<double>::zeros({2 * n, d});

  auto split = [&](const Tensor<double>& e) {
    Tensor<double> a = Tensor<double>::zeros({n, d}), b = Tensor<double>::zeros({n, d});
    std::copy(e.data.begin(), e.data.begin() + n * d, a.data.begin());
    std::copy(e.data.begin() + n * d, e.data.end(), b.data.begin());
    return std::make_pair(a, b);
  };

  auto [va, vb] = split(emb);
  Tensor<double> grad;
  rcg::info_nce_loss(va, vb, 0.5, &grad);
  grad_storage = grad;

  std::vector<rcg::ParamRef<double>> params = {{"emb", &emb, &grad_storage}};
  auto loss_fn = [&]() {
    auto [xa, xb] = split(emb);
    return rcg::info_nce_loss(xa, xb, 0.5);
  };
  const rcg::GradCheckReport report = rcg::finite_diff_check(params, loss_fn);
  INFO("max rel err " << report.max_rel_err());
  REQUIRE(report.pass(1e-6));
}

TEST_CASE("uniformity anchors and brute-force oracle") {
  // Two antipodal unit vectors at t = 2: ||x-y||^2 = 4, so log(exp(-8)).
  Tensor<double> anti({2, 2}, {1.0, 0.0, -1.0, 0.0});
  REQUIRE(rcg::uniformity(anti, 2.0) == Catch::Approx(-8.0).margin(1e-12));

  // Identical vectors: log(exp(0)) = 0.
  Tensor<double> same({2, 2}, {0.6, 0.8, 0.6, 0.8});
  REQUIRE(rcg::uniformity(same, 2.0) == Catch::Approx(0.0).margin(1e-12));

  // Four random unit vectors against an explicit double loop.
  Rng rng(47);
  Tensor<double> reps = Tensor<double>::zeros({4, 5});
  rng.fill_gaussian(reps.data.data(), reps.size());
  std::vector<std::vector<double>> unit(4, std::vector<double>(5));
  for (std::size_t i = 0; i < 4; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < 5; ++j) norm += reps.at(i, j) * reps.at(i, j);
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < 5; ++j) unit[i][j] = reps.at(i, j) / norm;
  }
  double acc = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      double dsq = 0.0;
      for (std::size_t c = 0; c < 5; ++c)
        dsq += (unit[i][c] - unit[j][c]) * (unit[i][c] - unit[j][c]);
      acc += std::exp(-2.0 * dsq);
      ++count;
    }
  REQUIRE(rcg::uniformity(reps, 2.0) == Catch::Approx(std::log(acc / count)).margin(1e-10));

  REQUIRE_THROWS_AS(rcg::uniformity(Tensor<double>({1, 2}, {1.0, 0.0})), rcg::UsageError);
}

TEST_CASE("uniformity for two points decreases with pairwise distance") {
  double prev = 1.0;
  for (double angle : {0.3, 0.9, 1.6, 2.4, 3.1}) {
    Tensor<double> two({2, 2}, {1.0, 0.0, std::cos(angle), std::sin(angle)});
    const double u = rcg::uniformity(two, 2.0);
    REQUIRE(u < prev);
    prev = u;
  }
}

TEST_CASE("train_encoder determinism and lr = 0 identity") {
  rcg::Dataset ds = rcg::make_shapes(2, 12, 8, 5);
  EncoderConfig cfg;
  cfg.input_dim = 64;
  cfg.hidden_dims = {16};
  cfg.projection_dim = 4;
  cfg.aug_shift_radius = 1;
  cfg.aug_noise_std = 0.02;
  rcg::TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;

  // lr = 0 leaves every parameter at initialization.
  rcg::TrainConfig zero = tc;
  zero.lr = 0.0;
  auto trained = rcg::train_encoder(ds.items, 8, 8, cfg, zero, 77);
  Rng init_rng = rcg::stream_rng(77, "encoder-init");
  EncoderNet<float> reference = EncoderNet<float>::build(cfg, init_rng);
  auto got = trained.net.params();
  auto want = reference.params();
  for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(got[i].value->data == want[i].value->data);

  // Same seed, same data: bit-identical parameters.
  tc.epochs = 2;
  auto run1 = rcg::train_encoder(ds.items, 8, 8, cfg, tc, 99);
  auto run2 = rcg::train_encoder(ds.items, 8, 8, cfg, tc, 99);
  auto p1 = run1.net.params();
  auto p2 = run2.net.params();
  for (std::size_t i = 0; i < p1.size(); ++i) REQUIRE(p1[i].value->data == p2[i].value->data);
  REQUIRE(run1.epoch_losses == run2.epoch_losses);
  REQUIRE(run1.net.trained);
}

TEST_CASE("short contrastive training separates clusters in cosine") {
  // Four visually distinct primitives; after training, same-class pairs
  // should be closer in cosine than cross-class pairs.
  rcg::Dataset ds = rcg::make_shapes(4, 40, 8, 11);
  EncoderConfig cfg;
  cfg.input_dim = 64;
  cfg.hidden_dims = {64};
  cfg.projection_dim = 8;
  cfg.aug_noise_std = 0.05;
  cfg.aug_shift_radius = 1;
  rcg::TrainConfig tc;
  tc.epochs = 12;
  tc.batch_size = 32;
  tc.lr = 2e-3;
  tc.weight_decay = 1e-4;
  auto result = rcg::train_encoder(ds.items, 8, 8, cfg, tc, 123);

  Tensor<float> reps = result.net.forward(ds.items);
  auto cosine = [&](std::size_t i, std::size_t j) {
    double dot = 0.0, ni = 0.0, nj = 0.0;
    for (std::size_t c = 0; c < reps.cols(); ++c) {
      dot += reps.at(i, c) * reps.at(j, c);
      ni += reps.at(i, c) * reps.at(i, c);
      nj += reps.at(j, c) * reps.at(j, c);
    }
    return dot / std::sqrt(ni * nj);
  };
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t j = i + 1; j < ds.size(); j += 7) {
      if (ds.labels[i] == ds.labels[j]) {
        intra += cosine(i, j);
        ++n_intra;
      } else {
        inter += cosine(i, j);
        ++n_inter;
      }
    }
  intra /= static_cast<double>(n_intra);
  inter /= static_cast<double>(n_inter);
  INFO("intra " << intra << " inter " << inter);
  REQUIRE(intra > inter);
}
