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

#ifndef RCG_CLI_HPP
#define RCG_CLI_HPP

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcg/pipeline.hpp"
#include "rcg/verify.hpp"

namespace rcg {

namespace cli_detail {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<std::size_t> steps;
  std::optional<double> eta;
  std::optional<std::string> out;
};

inline void add_common(CLI::App* cmd, CommonArgs& args, bool sampling_overrides = true) {
  cmd->add_option("--config", args.config_path, "pipeline config JSON file");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&args](const std::uint64_t& v) { args.seed = v; }, "override master seed");
  cmd->add_option_function<std::string>(
      "--out", [&args](const std::string& v) { args.out = v; }, "override output directory");
  if (sampling_overrides) {
    cmd->add_option_function<double>(
        "--tau", [&args](const double& v) { args.tau = v; }, "override guidance scale");
    cmd->add_option_function<std::size_t>(
        "--steps", [&args](const std::size_t& v) { args.steps = v; }, "override DDIM steps");
    cmd->add_option_function<double>(
        "--eta", [&args](const double& v) { args.eta = v; }, "override DDIM eta");
  }
}

inline PipelineConfig load_config(const CommonArgs& args) {
  PipelineConfig cfg = default_pipeline_config();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("cannot open config file: " + args.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + args.config_path + " is not valid JSON: " + e.what());
    }
    j.get_to(cfg);
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.out) cfg.out_dir = *args.out;
  if (args.tau) cfg.guidance.tau = *args.tau;
  if (args.steps) cfg.sampler.ddim_steps = *args.steps;
  if (args.eta) cfg.sampler.eta = *args.eta;
  return cfg;
}

inline std::string out_path(const PipelineConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

/// Training works on the dataset minus the holdout tail.
inline Dataset train_split(const PipelineConfig& cfg) {
  const Dataset full = load_dataset(cfg.dataset);
  if (cfg.holdout == 0) return full;
  Dataset train, held;
  split_dataset(full, cfg.holdout, train, held);
  return train;
}

inline Dataset holdout_split(const PipelineConfig& cfg) {
  if (cfg.holdout == 0) throw ConfigError("config holdout is 0; no held-out split exists");
  const Dataset full = load_dataset(cfg.dataset);
  Dataset train, held;
  split_dataset(full, cfg.holdout, train, held);
  return held;
}

inline bool is_mixture(const PipelineConfig& cfg) { return cfg.dataset.kind == "synthetic_mixture"; }

inline int cmd_train_encoder(const CommonArgs& args) {
  const PipelineConfig cfg = load_config(args);
  if (is_mixture(cfg))
    throw ConfigError("synthetic_mixture has no images; the encoder stage does not apply");
  const Dataset ds = train_split(cfg);
  EncoderConfig ecfg = cfg.encoder;
  ecfg.input_dim = ds.item_dim;
  auto result = train_encoder(ds.items, ds.image.height, ds.image.width, ecfg, cfg.encoder_train,
                              cfg.seed);
  const std::string path = out_path(cfg, "encoder.ckpt");
  save_encoder_checkpoint(path, result.net, result.epoch_losses);
  std::cout << "trained encoder on " << ds.size() << " items for " << cfg.encoder_train.epochs
            << " epochs; final loss " << (result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back())
            << "\nwrote " << path << "\n";
  return 0;
}

inline int cmd_extract_reps(const CommonArgs& args) {
  const PipelineConfig cfg = load_config(args);
  const Dataset ds = train_split(cfg);
  const std::string path = out_path(cfg, "reps.ckpt");
  if (is_mixture(cfg)) {
    // Mixture items already live in representation space; store them as-is.
    save_rep_store(path, ds.items, ds.labels,
                   {{"kind", "rep-store"}, {"dataset", cfg.dataset.to_json()}});
    std::cout << "wrote " << path << " (" << ds.size() << " vectors passed through)\n";
    return 0;
  }
  EncoderNet<float> encoder = load_encoder_checkpoint(out_path(cfg, "encoder.ckpt"));
  auto [reps, labels] = extract_reps(encoder, ds);
  save_rep_store(path, reps, labels,
                 {{"kind", "rep-store"},
                  {"dataset", cfg.dataset.to_json()},
                  {"encoder", encoder.cfg}});
  std::cout << "wrote " << path << " (" << reps.rows() << " representations)\n";
  return 0;
}

inline int cmd_train_rdm(const CommonArgs& args) {
  const PipelineConfig cfg = load_config(args);
  const RepStore store = [&]() -> RepStore {
    if (is_mixture(cfg)) {
      const Dataset ds = train_split(cfg);
      return {ds.items, ds.labels, {}};
    }
    return load_rep_store(out_path(cfg, "reps.ckpt"));
  }();
  RdmConfig rcfg = cfg.rdm;
  rcfg.rep_dim = store.reps.cols();
  const NoiseSchedule ns = cfg.schedule.make();
  auto result = train_rdm(store.reps, store.labels, rcfg, ns, cfg.rdm_train, cfg.seed);
  const std::string path = out_path(cfg, rcfg.conditional() ? "rdm_cond.ckpt" : "rdm.ckpt");
  save_rdm_checkpoint(path, result.net, cfg.schedule, result.epoch_losses);
  std::cout << "trained " << (rcfg.conditional() ? "conditional " : "") << "rdm on "
            << store.reps.rows() << " representations; final loss "
            << (result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back()) << "\nwrote "
            << path << "\n";
  return 0;
}

inline int cmd_train_gen(const CommonArgs& args) {
  const PipelineConfig cfg = load_config(args);
  if (is_mixture(cfg))
    throw ConfigError("synthetic_mixture has no images; the image generator does not apply");
  const Dataset ds = train_split(cfg);
  const RepStore store = load_rep_store(out_path(cfg, "reps.ckpt"));
  GenConfig gcfg = cfg.generator;
  gcfg.image_dim = ds.item_dim;
  gcfg.rep_dim = store.reps.cols();
  const NoiseSchedule ns = cfg.schedule.make();
  auto result = train_generator(ds.items, store.reps, gcfg, ns, cfg.gen_train, cfg.seed);
  const std::string path = out_path(cfg, "gen.ckpt");
  save_gen_checkpoint(path, result.net, cfg.schedule, result.epoch_losses);
  std::cout << "trained generator on " << ds.size() << " images; final loss "
            << (result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back()) << "\nwrote "
            << path << "\n";
  return 0;
}

inline void write_batch_outputs(const PipelineConfig& cfg, const std::string& base,
                                const SampleBatch& batch, const ImageSpec& image) {
  const std::string ckpt = out_path(cfg, base + ".ckpt");
  save_sample_batch(ckpt, batch);
  std::cout << "wrote " << ckpt << "\n";
  if (!batch.images.empty()) {
    const std::string pgm = out_path(cfg, base + ".pgm");
    write_pgm_grid(pgm, batch.images, image.height, image.width);
    std::cout << "wrote " << pgm << "\n";
  }
}

inline int cmd_sample(const CommonArgs& args, bool reps_only) {
  const PipelineConfig cfg = load_config(args);
  LoadedRdm rdm = load_rdm_checkpoint(out_path(cfg, "rdm.ckpt"));
  const NoiseSchedule ns = rdm.schedule.make();
  if (reps_only) {
    SampleBatch batch;
    batch.meta = {{"kind", "sample-reps"}, {"seed", cfg.seed}, {"count", cfg.sample_count},
                  {"sampler", cfg.sampler}};
    std::vector<Rng> rep_rng;
    for (std::size_t i = 0; i < cfg.sample_count; ++i)
      rep_rng.push_back(stream_rng(cfg.seed, "rdm-sample", i));
    batch.reps = rdm_sample_batch(rdm.net, ns, cfg.sampler, rep_rng);
    write_batch_outputs(cfg, "samples", batch, {});
    return 0;
  }
  LoadedGen gen = load_gen_checkpoint(out_path(cfg, "gen.ckpt"));
  const SampleBatch batch = sample_unconditional(cfg.sample_count, rdm.net, gen.net, ns,
                                                 cfg.sampler, cfg.guidance, cfg.seed);
  const Dataset probe = load_dataset(cfg.dataset);
  write_batch_outputs(cfg, "samples", batch, probe.image);
  return 0;
}

inline int cmd_sample_class(const CommonArgs& args, std::size_t class_label) {
  const PipelineConfig cfg = load_config(args);
  LoadedRdm rdm = load_rdm_checkpoint(out_path(cfg, "rdm_cond.ckpt"));
  LoadedGen gen = load_gen_checkpoint(out_path(cfg, "gen.ckpt"));
  const NoiseSchedule ns = rdm.schedule.make();
  const SampleBatch batch = sample_class_conditional(class_label, cfg.sample_count, rdm.net,
                                                     gen.net, ns, cfg.sampler, cfg.guidance,
                                                     cfg.seed);
  const Dataset probe = load_dataset(cfg.dataset);
  write_batch_outputs(cfg, "samples_class" + std::to_string(class_label), batch, probe.image);
  return 0;
}

inline int cmd_variations(const CommonArgs& args, std::size_t index, std::size_t n) {
  const PipelineConfig cfg = load_config(args);
  const Dataset ds = load_dataset(cfg.dataset);
  if (index >= ds.size()) throw UsageError("reference index out of range");
  EncoderNet<float> encoder = load_encoder_checkpoint(out_path(cfg, "encoder.ckpt"));
  LoadedGen gen = load_gen_checkpoint(out_path(cfg, "gen.ckpt"));
  const NoiseSchedule ns = gen.schedule.make();
  const std::vector<float> item(ds.items.row(index), ds.items.row(index) + ds.item_dim);
  const SampleBatch batch =
      variations(item, n, encoder, gen.net, ns, cfg.sampler, cfg.guidance, cfg.seed);
  write_batch_outputs(cfg, "variations", batch, ds.image);
  return 0;
}

inline int cmd_interpolate(const CommonArgs& args, std::size_t index_a, std::size_t index_b,
                           std::size_t k) {
  const PipelineConfig cfg = load_config(args);
  const Dataset ds = load_dataset(cfg.dataset);
  if (index_a >= ds.size() || index_b >= ds.size())
    throw UsageError("interpolation index out of range");
  EncoderNet<float> encoder = load_encoder_checkpoint(out_path(cfg, "encoder.ckpt"));
  LoadedGen gen = load_gen_checkpoint(out_path(cfg, "gen.ckpt"));
  const NoiseSchedule ns = gen.schedule.make();
  const std::vector<float> a(ds.items.row(index_a), ds.items.row(index_a) + ds.item_dim);
  const std::vector<float> b(ds.items.row(index_b), ds.items.row(index_b) + ds.item_dim);
  const SampleBatch batch =
      interpolate(a, b, k, encoder, gen.net, ns, cfg.sampler, cfg.guidance, cfg.seed);
  write_batch_outputs(cfg, "interpolate", batch, ds.image);
  return 0;
}

/// Loads a named tensor from a container path, or dataset images via the
/// pseudo-paths "dataset" (train split) and "holdout".
inline Tensor<float> load_eval_set(const PipelineConfig& cfg, const std::string& path,
                                   const std::string& tensor_name) {
  if (path == "dataset") return train_split(cfg).items;
  if (path == "holdout") return holdout_split(cfg).items;
  Checkpoint ckpt = load_checkpoint(path);
  const auto it = ckpt.tensors.find(tensor_name);
  if (it == ckpt.tensors.end())
    throw DataError(path + " does not contain tensor '" + tensor_name + "'");
  return it->second;
}

inline int cmd_evaluate(const CommonArgs& args, const std::string& metric,
                        const std::string& gen_path, const std::string& ref_path,
                        const std::string& encoder_path, std::optional<std::size_t> class_label) {
  const PipelineConfig cfg = load_config(args);
  EvalReport report;
  if (metric == "rep-fd") {
    const Tensor<float> gen = load_eval_set(cfg, gen_path, "reps");
    const Tensor<float> ref = load_eval_set(cfg, ref_path, "reps");
    report = rep_fd(gen, ref, cfg.seed);
  } else if (metric == "feature-fd") {
    const Tensor<float> gen = load_eval_set(cfg, gen_path, "images");
    const Tensor<float> ref = load_eval_set(cfg, ref_path, "images");
    EncoderNet<float> encoder = load_encoder_checkpoint(
        encoder_path.empty() ? out_path(cfg, "encoder.ckpt") : encoder_path);
    report = feature_fd(gen, ref, encoder, cfg.seed);
  } else if (metric == "uniformity") {
    const Tensor<float> gen = load_eval_set(cfg, gen_path, "reps");
    report.metric = "uniformity";
    report.value = uniformity(gen);
    report.n_gen = gen.rows();
    report.seed = cfg.seed;
  } else if (metric == "cluster-accuracy") {
    if (!class_label) throw UsageError("cluster-accuracy needs --class");
    const Tensor<float> gen = load_eval_set(cfg, gen_path, "reps");
    const RepStore ref = load_rep_store(ref_path);
    std::size_t num_classes = 0;
    for (int l : ref.labels)
      if (l >= 0) num_classes = std::max(num_classes, static_cast<std::size_t>(l) + 1);
    const Tensor<float> centroids = class_centroids(ref.reps, ref.labels, num_classes);
    report.metric = "cluster_accuracy";
    report.value = cluster_accuracy(gen, *class_label, centroids);
    report.n_gen = gen.rows();
    report.n_ref = ref.reps.rows();
    report.seed = cfg.seed;
  } else {
    throw UsageError("unknown metric '" + metric +
                     "' (expected rep-fd, feature-fd, uniformity or cluster-accuracy)");
  }
  std::cout << report.metric << " " << report.value << "\n";
  std::ofstream log(out_path(cfg, "reports.jsonl"), std::ios::app);
  log << report.to_json().dump() << "\n";
  return 0;
}

inline int cmd_grad_check(double tolerance) {
  const std::vector<ComponentCheck> checks = run_gradient_checks();
  bool ok = true;
  for (const auto& check : checks) {
    const double err = check.report.max_rel_err();
    const bool pass = check.report.pass(tolerance);
    ok = ok && pass;
    std::printf("%-16s max_rel_err %.3e  %s\n", check.component.c_str(), err,
                pass ? "ok" : "FAIL");
  }
  return ok ? 0 : 1;
}

inline int cmd_param_count(const CommonArgs& args) {
  const PipelineConfig cfg = load_config(args);
  std::cout << rdm_param_count(cfg.rdm) << "\n";
  return 0;
}

}  // namespace cli_detail

/// Full command-line surface; returns the process exit code.
/// 0 success, 1 usage/config error, 2 data error, 3 training divergence.
inline int cli_dispatch(std::vector<std::string> args) {
  CLI::App app{"representation-conditioned generation pipeline"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-default-config", print_defaults,
               "print the default pipeline config JSON and exit");

  cli_detail::CommonArgs common;

  auto* train_encoder_cmd = app.add_subcommand("train-encoder", "contrastive encoder pretraining");
  cli_detail::add_common(train_encoder_cmd, common, /*sampling_overrides=*/false);

  auto* extract_cmd = app.add_subcommand("extract-reps", "encode + normalize the dataset");
  cli_detail::add_common(extract_cmd, common, /*sampling_overrides=*/false);

  auto* train_rdm_cmd = app.add_subcommand("train-rdm", "representation diffusion training");
  cli_detail::add_common(train_rdm_cmd, common, /*sampling_overrides=*/false);

  auto* train_gen_cmd = app.add_subcommand("train-gen", "representation-conditioned generator training");
  cli_detail::add_common(train_gen_cmd, common, /*sampling_overrides=*/false);

  auto* sample_cmd = app.add_subcommand("sample", "two-stage unconditional sampling");
  bool reps_only = false;
  sample_cmd->add_flag("--reps-only", reps_only, "sample representations only (no image stage)");
  cli_detail::add_common(sample_cmd, common);

  auto* sample_class_cmd = app.add_subcommand("sample-class", "class-conditional sampling");
  std::size_t class_label = 0;
  sample_class_cmd->add_option("--class", class_label, "target class")->required();
  cli_detail::add_common(sample_class_cmd, common);

  auto* variations_cmd = app.add_subcommand("variations", "many samples from one representation");
  std::size_t var_index = 0, var_n = 8;
  variations_cmd->add_option("--index", var_index, "reference item index");
  variations_cmd->add_option("--n", var_n, "number of variations");
  cli_detail::add_common(variations_cmd, common);

  auto* interpolate_cmd = app.add_subcommand("interpolate", "samples along a representation mix");
  std::size_t index_a = 0, index_b = 1, interp_k = 8;
  interpolate_cmd->add_option("--index-a", index_a, "first item index");
  interpolate_cmd->add_option("--index-b", index_b, "second item index");
  interpolate_cmd->add_option("--k", interp_k, "number of interpolation segments");
  cli_detail::add_common(interpolate_cmd, common);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "distribution metrics on stored sets");
  std::string metric = "rep-fd", gen_path, ref_path, encoder_path;
  std::optional<std::size_t> eval_class;
  evaluate_cmd->add_option("--metric", metric, "rep-fd | feature-fd | uniformity | cluster-accuracy");
  evaluate_cmd->add_option("--gen", gen_path, "generated set (container path)")->required();
  evaluate_cmd->add_option("--ref", ref_path, "reference set (container path, 'dataset' or 'holdout')");
  evaluate_cmd->add_option("--encoder", encoder_path, "encoder checkpoint for feature-fd");
  evaluate_cmd->add_option_function<std::size_t>(
      "--class", [&eval_class](const std::size_t& v) { eval_class = v; }, "target class");
  cli_detail::add_common(evaluate_cmd, common, /*sampling_overrides=*/false);

  auto* grad_check_cmd = app.add_subcommand("grad-check", "finite-difference gradient verification");
  double tolerance = 1e-4;
  grad_check_cmd->add_option("--tolerance", tolerance, "max relative error allowed");

  auto* param_count_cmd = app.add_subcommand("param-count", "exact rdm parameter count");
  cli_detail::add_common(param_count_cmd, common, /*sampling_overrides=*/false);

  try {
    std::vector<const char*> argv;
    argv.push_back("rcg");
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (print_defaults) {
      const nlohmann::json j = default_pipeline_config();
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (train_encoder_cmd->parsed()) return cli_detail::cmd_train_encoder(common);
    if (extract_cmd->parsed()) return cli_detail::cmd_extract_reps(common);
    if (train_rdm_cmd->parsed()) return cli_detail::cmd_train_rdm(common);
    if (train_gen_cmd->parsed()) return cli_detail::cmd_train_gen(common);
    if (sample_cmd->parsed()) return cli_detail::cmd_sample(common, reps_only);
    if (sample_class_cmd->parsed()) return cli_detail::cmd_sample_class(common, class_label);
    if (variations_cmd->parsed()) return cli_detail::cmd_variations(common, var_index, var_n);
    if (interpolate_cmd->parsed())
      return cli_detail::cmd_interpolate(common, index_a, index_b, interp_k);
    if (evaluate_cmd->parsed())
      return cli_detail::cmd_evaluate(common, metric, gen_path, ref_path, encoder_path, eval_class);
    if (grad_check_cmd->parsed()) return cli_detail::cmd_grad_check(tolerance);
    if (param_count_cmd->parsed()) return cli_detail::cmd_param_count(common);
    std::cout << app.help();
    return 1;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rcg

#endif  // RCG_CLI_HPP
