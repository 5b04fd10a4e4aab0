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
#include <filesystem>
#include <fstream>

#include "rcg/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rcg_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// A pipeline config small enough that the whole CLI chain runs in seconds.
nlohmann::json tiny_config(const std::string& out_dir) {
  rcg::PipelineConfig cfg;
  cfg.seed = 5;
  cfg.out_dir = out_dir;
  cfg.holdout = 8;
  cfg.dataset.kind = "synthetic_shapes";
  cfg.dataset.num_classes = 2;
  cfg.dataset.items_per_class = 20;
  cfg.dataset.image_size = 8;
  cfg.dataset.seed = 3;
  cfg.encoder.input_dim = 64;
  cfg.encoder.hidden_dims = {16};
  cfg.encoder.projection_dim = 6;
  cfg.encoder_train = {2, 16, 1e-3, 1e-4, 0.9, 0.999};
  cfg.schedule = {40, 1e-3, 0.05};
  cfg.rdm = {1, 16, 6, 4, 8, 0};
  cfg.rdm_train = {2, 16, 1e-3, 0.01, 0.9, 0.999};
  cfg.generator = {64, 12, 1, 6, 4, 0.1};
  cfg.gen_train = {2, 16, 1e-3, 0.01, 0.9, 0.999};
  cfg.sampler = {8, 1.0, 0};
  cfg.guidance = {0.0, "linear"};
  cfg.sample_count = 8;
  return cfg;
}

int run(std::vector<std::string> args) { return rcg::cli_dispatch(std::move(args)); }

}  // namespace

TEST_CASE("cli full pipeline chain produces every artifact") {
  TempDir dir;
  const std::string cfg_path = dir.file("config.json");
  {
    std::ofstream out(cfg_path);
    out << tiny_config(dir.file("out")).dump(2);
  }

  REQUIRE(run({"train-encoder", "--config", cfg_path}) == 0);
  REQUIRE(fs::exists(dir.file("out/encoder.ckpt")));
  REQUIRE(run({"extract-reps", "--config", cfg_path}) == 0);
  REQUIRE(fs::exists(dir.file("out/reps.ckpt")));
  REQUIRE(run({"train-rdm", "--config", cfg_path}) == 0);
  REQUIRE(fs::exists(dir.file("out/rdm.ckpt")));
  REQUIRE(run({"train-gen", "--config", cfg_path}) == 0);
  REQUIRE(fs::exists(dir.file("out/gen.ckpt")));
  REQUIRE(run({"sample", "--config", cfg_path}) == 0);
  REQUIRE(fs::exists(dir.file("out/samples.ckpt")));
  REQUIRE(fs::exists(dir.file("out/samples.pgm")));
  REQUIRE(run({"variations", "--config", cfg_path, "--index", "0", "--n", "3"}) == 0);
  REQUIRE(fs::exists(dir.file("out/variations.ckpt")));
  REQUIRE(run({"interpolate", "--config", cfg_path, "--index-a", "0", "--index-b", "1", "--k",
               "2"}) == 0);
  REQUIRE(fs::exists(dir.file("out/interpolate.ckpt")));

  // The rep store rows match the train split (40 - 8 holdout).
  const rcg::RepStore store = rcg::load_rep_store(dir.file("out/reps.ckpt"));
  REQUIRE(store.reps.rows() == 32);

  // Evaluating a set against itself prints and records zero.
  REQUIRE(run({"evaluate", "--config", cfg_path, "--metric", "rep-fd", "--gen",
               dir.file("out/reps.ckpt"), "--ref", dir.file("out/reps.ckpt")}) == 0);
  std::ifstream reports(dir.file("out/reports.jsonl"));
  std::string line;
  REQUIRE(std::getline(reports, line));
  const auto report = nlohmann::json::parse(line);
  REQUIRE(report.at("value").get<double>() == 0.0);

  // feature-fd against the holdout split runs end to end.
  REQUIRE(run({"evaluate", "--config", cfg_path, "--metric", "feature-fd", "--gen",
               dir.file("out/samples.ckpt"), "--ref", "holdout"}) == 0);

  // uniformity on the stored representations.
  REQUIRE(run({"evaluate", "--config", cfg_path, "--metric", "uniformity", "--gen",
               dir.file("out/reps.ckpt")}) == 0);
}

TEST_CASE("cli rerun from the same master seed is byte-identical") {
  TempDir dir;
  const std::string cfg_path = dir.file("config.json");
  {
    std::ofstream out(cfg_path);
    out << tiny_config(dir.file("out")).dump(2);
  }
  auto run_all = [&](const std::string& out_dir) {
    REQUIRE(run({"train-encoder", "--config", cfg_path, "--out", out_dir}) == 0);
    REQUIRE(run({"extract-reps", "--config", cfg_path, "--out", out_dir}) == 0);
    REQUIRE(run({"train-rdm", "--config", cfg_path, "--out", out_dir}) == 0);
    REQUIRE(run({"train-gen", "--config", cfg_path, "--out", out_dir}) == 0);
    REQUIRE(run({"sample", "--config", cfg_path, "--out", out_dir}) == 0);
  };
  run_all(dir.file("a"));
  run_all(dir.file("b"));
  for (const std::string name :
       {"encoder.ckpt", "reps.ckpt", "rdm.ckpt", "gen.ckpt", "samples.ckpt", "samples.pgm"}) {
    INFO(name);
    REQUIRE(rcg::hash_file(dir.file("a/" + name)) == rcg::hash_file(dir.file("b/" + name)));
  }
}

TEST_CASE("cli tau zero equals guidance disabled byte-for-byte") {
  TempDir dir;
  const std::string cfg_path = dir.file("config.json");
  nlohmann::json cfg = tiny_config(dir.file("out"));
  {
    std::ofstream out(cfg_path);
    out << cfg.dump(2);
  }
  REQUIRE(run({"train-encoder", "--config", cfg_path}) == 0);
  REQUIRE(run({"extract-reps", "--config", cfg_path}) == 0);
  REQUIRE(run({"train-rdm", "--config", cfg_path}) == 0);
  REQUIRE(run({"train-gen", "--config", cfg_path}) == 0);

  // Default config has guidance off; --tau 0 must reproduce it exactly.
  REQUIRE(run({"sample", "--config", cfg_path}) == 0);
  const auto ckpt_off = rcg::hash_file(dir.file("out/samples.ckpt"));
  const auto pgm_off = rcg::hash_file(dir.file("out/samples.pgm"));
  REQUIRE(run({"sample", "--config", cfg_path, "--tau", "0"}) == 0);
  REQUIRE(rcg::hash_file(dir.file("out/samples.ckpt")) == ckpt_off);
  REQUIRE(rcg::hash_file(dir.file("out/samples.pgm")) == pgm_off);
}

TEST_CASE("cli exit codes map error classes") {
  TempDir dir;
  // Unknown flag: usage error.
  REQUIRE(run({"sample", "--bogus"}) == 1);
  // Missing data file: data error.
  const std::string cfg_path = dir.file("config.json");
  {
    std::ofstream out(cfg_path);
    out << tiny_config(dir.file("out")).dump(2);
  }
  REQUIRE(run({"sample", "--config", cfg_path}) == 2);
  // Malformed config: usage/config error.
  const std::string bad_cfg = dir.file("bad.json");
  {
    std::ofstream out(bad_cfg);
    out << "{ not json";
  }
  REQUIRE(run({"train-encoder", "--config", bad_cfg}) == 1);
  // Divergent training: exit 3.
  nlohmann::json cfg = tiny_config(dir.file("out"));
  cfg["encoder_train"]["lr"] = 1e18;
  cfg["encoder_train"]["epochs"] = 30;
  const std::string diverge_cfg = dir.file("diverge.json");
  {
    std::ofstream out(diverge_cfg);
    out << cfg.dump(2);
  }
  REQUIRE(run({"train-encoder", "--config", diverge_cfg}) == 3);
}

TEST_CASE("cli mixture pipeline trains the rdm directly on vectors") {
  TempDir dir;
  rcg::PipelineConfig cfg;
  cfg.seed = 9;
  cfg.out_dir = dir.file("out");
  cfg.dataset.kind = "synthetic_mixture";
  cfg.dataset.num_classes = 4;
  cfg.dataset.items_per_class = 50;
  cfg.dataset.dim = 2;
  cfg.schedule = {40, 1e-3, 0.05};
  cfg.rdm = {1, 16, 2, 4, 8, 0};
  cfg.rdm_train = {2, 32, 1e-3, 0.01, 0.9, 0.999};
  cfg.sampler = {8, 1.0, 0};
  cfg.sample_count = 5;
  const std::string cfg_path = dir.file("config.json");
  {
    std::ofstream out(cfg_path);
    out << nlohmann::json(cfg).dump(2);
  }
  REQUIRE(run({"train-rdm", "--config", cfg_path}) == 0);
  REQUIRE(run({"sample", "--reps-only", "--config", cfg_path}) == 0);
  const rcg::SampleBatch batch = rcg::load_sample_batch(dir.file("out/samples.ckpt"));
  REQUIRE(batch.reps.rows() == 5);
  REQUIRE(batch.reps.cols() == 2);
  REQUIRE(batch.images.empty());

  // The encoder and generator stages reject vector datasets.
  REQUIRE(run({"train-encoder", "--config", cfg_path}) == 1);
  REQUIRE(run({"train-gen", "--config", cfg_path}) == 1);
}

TEST_CASE("cli help and default-config paths exit cleanly") {
  REQUIRE(run({"--help"}) == 0);
  REQUIRE(run({"--print-default-config"}) == 0);
  REQUIRE(run({"param-count"}) == 0);
  REQUIRE(run({"grad-check"}) == 0);
}
