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

#ifndef RCG_PIPELINE_HPP
#define RCG_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcg/checkpoint.hpp"
#include "rcg/dataset.hpp"
#include "rcg/encoder.hpp"
#include "rcg/generator.hpp"
#include "rcg/metrics.hpp"
#include "rcg/rdm.hpp"

namespace rcg {

// ---------------------------------------------------------------------------
// JSON round-trips for every config struct.

struct ScheduleConfig {
  std::size_t timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  NoiseSchedule make() const { return make_schedule(timesteps, beta_start, beta_end); }
};

inline void to_json(nlohmann::json& j, const ScheduleConfig& c) {
  j = {{"timesteps", c.timesteps}, {"beta_start", c.beta_start}, {"beta_end", c.beta_end}};
}
inline void from_json(const nlohmann::json& j, ScheduleConfig& c) {
  c.timesteps = j.value("timesteps", c.timesteps);
  c.beta_start = j.value("beta_start", c.beta_start);
  c.beta_end = j.value("beta_end", c.beta_end);
}

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"input_dim", c.input_dim},     {"hidden_dims", c.hidden_dims},
       {"projection_dim", c.projection_dim}, {"temperature", c.temperature},
       {"aug_noise_std", c.aug_noise_std},   {"aug_shift_radius", c.aug_shift_radius}};
}
inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.input_dim = j.value("input_dim", c.input_dim);
  c.hidden_dims = j.value("hidden_dims", c.hidden_dims);
  c.projection_dim = j.value("projection_dim", c.projection_dim);
  c.temperature = j.value("temperature", c.temperature);
  c.aug_noise_std = j.value("aug_noise_std", c.aug_noise_std);
  c.aug_shift_radius = j.value("aug_shift_radius", c.aug_shift_radius);
}

inline void to_json(nlohmann::json& j, const RdmConfig& c) {
  j = {{"num_blocks", c.num_blocks},
       {"hidden_dim", c.hidden_dim},
       {"rep_dim", c.rep_dim},
       {"timestep_embed_dim", c.timestep_embed_dim},
       {"class_embed_dim", c.class_embed_dim},
       {"num_classes", c.num_classes}};
}
inline void from_json(const nlohmann::json& j, RdmConfig& c) {
  c.num_blocks = j.value("num_blocks", c.num_blocks);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.rep_dim = j.value("rep_dim", c.rep_dim);
  c.timestep_embed_dim = j.value("timestep_embed_dim", c.timestep_embed_dim);
  c.class_embed_dim = j.value("class_embed_dim", c.class_embed_dim);
  c.num_classes = j.value("num_classes", c.num_classes);
}

inline void to_json(nlohmann::json& j, const GenConfig& c) {
  j = {{"image_dim", c.image_dim},
       {"hidden_dim", c.hidden_dim},
       {"num_blocks", c.num_blocks},
       {"rep_dim", c.rep_dim},
       {"timestep_embed_dim", c.timestep_embed_dim},
       {"rep_drop_rate", c.rep_drop_rate}};
}
inline void from_json(const nlohmann::json& j, GenConfig& c) {
  c.image_dim = j.value("image_dim", c.image_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.num_blocks = j.value("num_blocks", c.num_blocks);
  c.rep_dim = j.value("rep_dim", c.rep_dim);
  c.timestep_embed_dim = j.value("timestep_embed_dim", c.timestep_embed_dim);
  c.rep_drop_rate = j.value("rep_drop_rate", c.rep_drop_rate);
}

inline void to_json(nlohmann::json& j, const SamplerConfig& c) {
  j = {{"ddim_steps", c.ddim_steps}, {"eta", c.eta}, {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, SamplerConfig& c) {
  c.ddim_steps = j.value("ddim_steps", c.ddim_steps);
  c.eta = j.value("eta", c.eta);
  c.seed = j.value("seed", c.seed);
}

inline void to_json(nlohmann::json& j, const GuidanceConfig& c) {
  j = {{"tau", c.tau}, {"schedule", c.schedule}};
}
inline void from_json(const nlohmann::json& j, GuidanceConfig& c) {
  c.tau = j.value("tau", c.tau);
  c.schedule = j.value("schedule", c.schedule);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},           {"batch_size", c.batch_size}, {"lr", c.lr},
       {"weight_decay", c.weight_decay}, {"beta1", c.beta1},         {"beta2", c.beta2}};
}
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
}

/// Everything one experiment needs; a config plus the master seed
/// reproduces every artifact byte for byte.
struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::size_t holdout = 0;
  DatasetSpec dataset;
  EncoderConfig encoder;
  TrainConfig encoder_train{/*epochs=*/30, /*batch_size=*/128, /*lr=*/1e-3,
                            /*weight_decay=*/1e-4, 0.9, 0.999};
  ScheduleConfig schedule;
  RdmConfig rdm;
  TrainConfig rdm_train{/*epochs=*/100, /*batch_size=*/512, /*lr=*/5.12e-4,
                        /*weight_decay=*/0.01, 0.9, 0.999};
  GenConfig generator;
  TrainConfig gen_train{/*epochs=*/200, /*batch_size=*/128, /*lr=*/1.5e-4,
                        /*weight_decay=*/0.05, 0.9, 0.95};
  SamplerConfig sampler;
  GuidanceConfig guidance;
  std::size_t sample_count = 64;

  void validate() const {
    if (encoder.projection_dim != rdm.rep_dim || rdm.rep_dim != generator.rep_dim)
      throw ConfigError("encoder projection_dim, rdm rep_dim and generator rep_dim must agree");
  }
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"seed", c.seed},
       {"out_dir", c.out_dir},
       {"holdout", c.holdout},
       {"dataset", c.dataset.to_json()},
       {"encoder", c.encoder},
       {"encoder_train", c.encoder_train},
       {"schedule", c.schedule},
       {"rdm", c.rdm},
       {"rdm_train", c.rdm_train},
       {"generator", c.generator},
       {"gen_train", c.gen_train},
       {"sampler", c.sampler},
       {"guidance", c.guidance},
       {"sample_count", c.sample_count}};
}
inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.holdout = j.value("holdout", c.holdout);
  if (j.contains("dataset")) c.dataset = DatasetSpec::from_json(j.at("dataset"));
  if (j.contains("encoder")) j.at("encoder").get_to(c.encoder);
  if (j.contains("encoder_train")) j.at("encoder_train").get_to(c.encoder_train);
  if (j.contains("schedule")) j.at("schedule").get_to(c.schedule);
  if (j.contains("rdm")) j.at("rdm").get_to(c.rdm);
  if (j.contains("rdm_train")) j.at("rdm_train").get_to(c.rdm_train);
  if (j.contains("generator")) j.at("generator").get_to(c.generator);
  if (j.contains("gen_train")) j.at("gen_train").get_to(c.gen_train);
  if (j.contains("sampler")) j.at("sampler").get_to(c.sampler);
  if (j.contains("guidance")) j.at("guidance").get_to(c.guidance);
  c.sample_count = j.value("sample_count", c.sample_count);
}

inline PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  c.dataset.kind = "synthetic_shapes";
  return c;
}

// ---------------------------------------------------------------------------
// Representation stores: the shared container with tensors "reps" [n, D]
// and "labels" [n] (-1 when unlabeled; stored as f32, which is exact for
// label-sized integers).

inline void save_rep_store(const std::string& path, const Tensor<float>& reps,
                           const std::vector<int>& labels, nlohmann::json config) {
  if (reps.rows() != labels.size()) throw UsageError("rep store label count mismatch");
  Checkpoint ckpt;
  ckpt.config = std::move(config);
  ckpt.tensors.emplace("reps", reps);
  Tensor<float> lab = Tensor<float>::zeros({labels.size()});
  for (std::size_t i = 0; i < labels.size(); ++i) lab.data[i] = static_cast<float>(labels[i]);
  ckpt.tensors.emplace("labels", std::move(lab));
  save_checkpoint(path, ckpt);
}

struct RepStore {
  Tensor<float> reps;
  std::vector<int> labels;
  nlohmann::json config;
};

inline RepStore load_rep_store(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  const auto rit = ckpt.tensors.find("reps");
  const auto lit = ckpt.tensors.find("labels");
  if (rit == ckpt.tensors.end() || lit == ckpt.tensors.end())
    throw DataError("rep store " + path + " must contain tensors 'reps' and 'labels'");
  RepStore store;
  store.reps = rit->second;
  store.labels.resize(lit->second.size());
  for (std::size_t i = 0; i < store.labels.size(); ++i)
    store.labels[i] = static_cast<int>(lit->second.data[i]);
  if (store.reps.rows() != store.labels.size())
    throw DataError("rep store " + path + " has misaligned reps and labels");
  store.config = std::move(ckpt.config);
  return store;
}

/// Encode + normalize every dataset item. Labels ride along for the
/// conditional RDM and for cluster accuracy.
inline std::pair<Tensor<float>, std::vector<int>> extract_reps(EncoderNet<float>& encoder,
                                                               const Dataset& ds) {
  const std::size_t d = encoder.cfg.projection_dim;
  Tensor<float> out = Tensor<float>::zeros({ds.size(), d});
  Tensor<float> features = encoder.forward(ds.items);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const float* src = features.row(i);
    std::vector<float> raw(src, src + d);
    try {
      const Representation<float> rep = normalize_rep(raw);
      std::copy(rep.values.begin(), rep.values.end(), out.row(i));
    } catch (const DegenerateRepresentationError& e) {
      throw DataError("item " + std::to_string(i) + ": " + e.what());
    }
  }
  std::vector<int> labels = ds.labels;
  labels.resize(ds.size(), -1);
  return {std::move(out), std::move(labels)};
}

// ---------------------------------------------------------------------------
// Sample batches: generated representations and/or images plus the seeds
// and configs that produced them.

struct SampleBatch {
  Tensor<float> reps;    // [n, D] conditioning representations
  Tensor<float> images;  // [n, P], empty for representation-only batches
  nlohmann::json meta;
};

inline void save_sample_batch(const std::string& path, const SampleBatch& batch) {
  Checkpoint ckpt;
  ckpt.config = batch.meta;
  if (!batch.reps.empty()) ckpt.tensors.emplace("reps", batch.reps);
  if (!batch.images.empty()) ckpt.tensors.emplace("images", batch.images);
  save_checkpoint(path, ckpt);
}

inline SampleBatch load_sample_batch(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  SampleBatch batch;
  batch.meta = ckpt.config;
  if (auto it = ckpt.tensors.find("reps"); it != ckpt.tensors.end()) batch.reps = it->second;
  if (auto it = ckpt.tensors.find("images"); it != ckpt.tensors.end()) batch.images = it->second;
  return batch;
}

namespace detail {

/// RDM outputs are normalized before conditioning the image generator so
/// the sampling-time condition distribution matches training.
inline Tensor<float> normalize_rows(const Tensor<float>& raw) {
  Tensor<float> out = Tensor<float>::zeros(raw.shape);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const std::vector<float> row(raw.row(i), raw.row(i) + raw.cols());
    const Representation<float> rep = normalize_rep(row);
    std::copy(rep.values.begin(), rep.values.end(), out.row(i));
  }
  return out;
}

}  // namespace detail

/// Two-stage unconditional generation: sample representations with the RDM,
/// normalize them, then sample images conditioned on them. Per-index seed
/// streams make each sample independent of the batch it was drawn in.
inline SampleBatch sample_unconditional(std::size_t n, RdmNet<float>& rdm, GenNet<float>& gen,
                                        const NoiseSchedule& ns, const SamplerConfig& sc,
                                        const GuidanceConfig& gc, std::uint64_t master_seed) {
  if (rdm.cfg.rep_dim != gen.cfg.rep_dim)
    throw ConfigError("rdm and generator rep_dim differ: " + std::to_string(rdm.cfg.rep_dim) +
                      " vs " + std::to_string(gen.cfg.rep_dim));
  SampleBatch batch;
  batch.meta = {{"kind", "sample"},
                {"seed", master_seed},
                {"count", n},
                {"sampler", sc},
                {"guidance", gc}};
  if (n == 0) return batch;
  std::vector<Rng> rep_rng, img_rng;
  for (std::size_t i = 0; i < n; ++i) {
    rep_rng.push_back(stream_rng(master_seed, "rdm-sample", i));
    img_rng.push_back(stream_rng(master_seed, "image-sample", i));
  }
  Tensor<float> raw = rdm_sample_batch(rdm, ns, sc, rep_rng);
  batch.reps = detail::normalize_rows(raw);
  batch.images = sample_images(gen, batch.reps, ns, sc, gc, img_rng);
  return batch;
}

/// Class-conditional generation: a class-conditional RDM produces the
/// representations; the image generator is untouched.
inline SampleBatch sample_class_conditional(std::size_t class_label, std::size_t n,
                                            RdmNet<float>& cond_rdm, GenNet<float>& gen,
                                            const NoiseSchedule& ns, const SamplerConfig& sc,
                                            const GuidanceConfig& gc, std::uint64_t master_seed) {
  if (!cond_rdm.cfg.conditional()) throw UsageError("sample_class_conditional needs a conditional rdm");
  if (class_label >= cond_rdm.cfg.num_classes)
    throw UsageError("class " + std::to_string(class_label) + " out of range (num_classes=" +
                     std::to_string(cond_rdm.cfg.num_classes) + ")");
  if (cond_rdm.cfg.rep_dim != gen.cfg.rep_dim)
    throw ConfigError("rdm and generator rep_dim differ");
  SampleBatch batch;
  batch.meta = {{"kind", "sample-class"},
                {"class", class_label},
                {"seed", master_seed},
                {"count", n},
                {"sampler", sc},
                {"guidance", gc}};
  if (n == 0) return batch;
  std::vector<Rng> rep_rng, img_rng;
  for (std::size_t i = 0; i < n; ++i) {
    rep_rng.push_back(stream_rng(master_seed, "rdm-sample", i));
    img_rng.push_back(stream_rng(master_seed, "image-sample", i));
  }
  const std::vector<std::size_t> labels(n, class_label);
  Tensor<float> raw = rdm_sample_batch(cond_rdm, ns, sc, rep_rng, &labels);
  batch.reps = detail::normalize_rows(raw);
  batch.images = sample_images(gen, batch.reps, ns, sc, gc, img_rng);
  return batch;
}

/// Encode a reference item once, then sample n images from distinct seeds
/// all conditioned on that single representation.
inline SampleBatch variations(const std::vector<float>& reference_item, std::size_t n,
                              EncoderNet<float>& encoder, GenNet<float>& gen,
                              const NoiseSchedule& ns, const SamplerConfig& sc,
                              const GuidanceConfig& gc, std::uint64_t master_seed) {
  const Representation<float> raw = encode(encoder, reference_item);
  const Representation<float> rep = normalize_rep(raw.values);
  SampleBatch batch;
  batch.meta = {{"kind", "variations"}, {"seed", master_seed}, {"count", n},
                {"sampler", sc},        {"guidance", gc}};
  batch.reps = Tensor<float>::zeros({n, rep.dim()});
  std::vector<Rng> img_rng;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(rep.values.begin(), rep.values.end(), batch.reps.row(i));
    img_rng.push_back(stream_rng(master_seed, "image-sample", i));
  }
  if (n > 0) batch.images = sample_images(gen, batch.reps, ns, sc, gc, img_rng);
  return batch;
}

/// Images conditioned on linear interpolations between the representations
/// of two items, all sharing one image-noise seed so only the condition
/// varies. Endpoints reuse the stored conditions bit-exactly.
inline SampleBatch interpolate(const std::vector<float>& item_a, const std::vector<float>& item_b,
                               std::size_t k, EncoderNet<float>& encoder, GenNet<float>& gen,
                               const NoiseSchedule& ns, const SamplerConfig& sc,
                               const GuidanceConfig& gc, std::uint64_t master_seed) {
  if (k < 1) throw UsageError("interpolate needs k >= 1");
  const Representation<float> rep_a = normalize_rep(encode(encoder, item_a).values);
  const Representation<float> rep_b = normalize_rep(encode(encoder, item_b).values);
  const std::size_t d = rep_a.dim();
  SampleBatch batch;
  batch.meta = {{"kind", "interpolate"}, {"seed", master_seed}, {"k", k},
                {"sampler", sc},         {"guidance", gc}};
  batch.reps = Tensor<float>::zeros({k + 1, d});
  std::vector<Rng> img_rng;
  for (std::size_t j = 0; j <= k; ++j) {
    if (j == 0) {
      std::copy(rep_a.values.begin(), rep_a.values.end(), batch.reps.row(0));
    } else if (j == k) {
      std::copy(rep_b.values.begin(), rep_b.values.end(), batch.reps.row(k));
    } else {
      const double lambda = static_cast<double>(j) / static_cast<double>(k);
      std::vector<float> mix(d);
      for (std::size_t c = 0; c < d; ++c)
        mix[c] = static_cast<float>((1.0 - lambda) * rep_a.values[c] + lambda * rep_b.values[c]);
      const Representation<float> rep = normalize_rep(mix);
      std::copy(rep.values.begin(), rep.values.end(), batch.reps.row(j));
    }
    img_rng.push_back(stream_rng(master_seed, "image-sample", 0));
  }
  batch.images = sample_images(gen, batch.reps, ns, sc, gc, img_rng);
  return batch;
}

// ---------------------------------------------------------------------------
// Stage checkpoints: each file's header carries the producing config so a
// network can be rebuilt exactly from the file alone.

inline void save_encoder_checkpoint(const std::string& path, EncoderNet<float>& net,
                                    const std::vector<double>& train_log) {
  nlohmann::json config = {{"kind", "encoder"},
                           {"encoder", net.cfg},
                           {"trained", net.trained},
                           {"train_log", train_log}};
  save_checkpoint(path, checkpoint_of(net, std::move(config)));
}

inline EncoderNet<float> load_encoder_checkpoint(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.value("kind", "") != "encoder")
    throw DataError(path + " is not an encoder checkpoint");
  EncoderConfig cfg;
  ckpt.config.at("encoder").get_to(cfg);
  Rng dummy(0);
  EncoderNet<float> net = EncoderNet<float>::build(cfg, dummy);
  load_params(net, ckpt);
  net.trained = ckpt.config.value("trained", false);
  return net;
}

inline void save_rdm_checkpoint(const std::string& path, RdmNet<float>& net,
                                const ScheduleConfig& schedule,
                                const std::vector<double>& train_log) {
  nlohmann::json config = {
      {"kind", "rdm"}, {"rdm", net.cfg}, {"schedule", schedule}, {"train_log", train_log}};
  save_checkpoint(path, checkpoint_of(net, std::move(config)));
}

struct LoadedRdm {
  RdmNet<float> net;
  ScheduleConfig schedule;
};

inline LoadedRdm load_rdm_checkpoint(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.value("kind", "") != "rdm") throw DataError(path + " is not an rdm checkpoint");
  RdmConfig cfg;
  ckpt.config.at("rdm").get_to(cfg);
  LoadedRdm out;
  Rng dummy(0);
  out.net = RdmNet<float>::build(cfg, dummy);
  load_params(out.net, ckpt);
  ckpt.config.at("schedule").get_to(out.schedule);
  return out;
}

inline void save_gen_checkpoint(const std::string& path, GenNet<float>& net,
                                const ScheduleConfig& schedule,
                                const std::vector<double>& train_log) {
  nlohmann::json config = {{"kind", "generator"},
                           {"generator", net.cfg},
                           {"schedule", schedule},
                           {"train_log", train_log}};
  save_checkpoint(path, checkpoint_of(net, std::move(config)));
}

struct LoadedGen {
  GenNet<float> net;
  ScheduleConfig schedule;
};

inline LoadedGen load_gen_checkpoint(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.value("kind", "") != "generator")
    throw DataError(path + " is not a generator checkpoint");
  GenConfig cfg;
  ckpt.config.at("generator").get_to(cfg);
  LoadedGen out;
  Rng dummy(0);
  out.net = GenNet<float>::build(cfg, dummy);
  load_params(out.net, ckpt);
  ckpt.config.at("schedule").get_to(out.schedule);
  return out;
}

// ---------------------------------------------------------------------------
// Misc.

inline std::uint64_t hash_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t hash_file(const std::string& path) { return hash_bytes(read_file(path)); }

}  // namespace rcg

#endif  // RCG_PIPELINE_HPP
