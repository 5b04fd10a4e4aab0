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

#ifndef RCG_DATASET_HPP
#define RCG_DATASET_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcg/checkpoint.hpp"
#include "rcg/rng.hpp"
#include "rcg/tensor.hpp"

namespace rcg {

struct ImageSpec {
  std::size_t height = 0, width = 0, channels = 1;
  std::size_t pixels() const { return height * width * channels; }
};

/// Items are flat rows: images in [0,1] for image datasets, raw vectors for
/// mixture datasets (item_dim then has no image interpretation).
struct Dataset {
  ImageSpec image;
  std::size_t item_dim = 0;
  Tensor<float> items;  // [n, item_dim]
  std::vector<int> labels;  // -1 when unlabeled

  std::size_t size() const { return items.rows(); }
};

/// What to load or generate; a spec plus its seed fully determines the
/// dataset.
struct DatasetSpec {
  std::string kind;  // {mnist_idx, synthetic_shapes, synthetic_mixture}
  // mnist_idx
  std::string images_path, labels_path;
  // synthetic generators
  std::size_t num_classes = 3;
  std::size_t items_per_class = 4000;
  std::size_t image_size = 16;   // shapes
  std::size_t dim = 2;           // mixture
  double center_scale = 1.5;     // mixture
  double noise_std = 0.15;       // mixture
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"kind", kind}, {"seed", seed}};
    if (kind == "mnist_idx") {
      j["images_path"] = images_path;
      j["labels_path"] = labels_path;
    } else if (kind == "synthetic_shapes") {
      j["num_classes"] = num_classes;
      j["items_per_class"] = items_per_class;
      j["image_size"] = image_size;
    } else {
      j["num_classes"] = num_classes;
      j["items_per_class"] = items_per_class;
      j["dim"] = dim;
      j["center_scale"] = center_scale;
      j["noise_std"] = noise_std;
    }
    return j;
  }

  static DatasetSpec from_json(const nlohmann::json& j) {
    DatasetSpec s;
    s.kind = j.at("kind").get<std::string>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.images_path = j.value("images_path", std::string{});
    s.labels_path = j.value("labels_path", std::string{});
    s.num_classes = j.value("num_classes", std::size_t{3});
    s.items_per_class = j.value("items_per_class", std::size_t{4000});
    s.image_size = j.value("image_size", std::size_t{16});
    s.dim = j.value("dim", std::size_t{2});
    s.center_scale = j.value("center_scale", 1.5);
    s.noise_std = j.value("noise_std", 0.15);
    return s;
  }
};

// ---------------------------------------------------------------------------
// IDX (MNIST) parsing: big-endian magic and dimension sizes, raw ubyte data.

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw DataError("idx file truncated in header: " + path);
  return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Parses the classic IDX pair; pixels are scaled to [0,1].
inline Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw DataError("cannot open idx images: " + images_path);
  const std::uint32_t img_magic = detail::read_be_u32(img, images_path);
  if (img_magic != kIdxImagesMagic)
    throw DataError("bad idx images magic 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%08x", img_magic);
      return std::string(buf);
    }() + " in " + images_path);
  const std::uint32_t count = detail::read_be_u32(img, images_path);
  const std::uint32_t rows = detail::read_be_u32(img, images_path);
  const std::uint32_t cols = detail::read_be_u32(img, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw DataError("cannot open idx labels: " + labels_path);
  const std::uint32_t lab_magic = detail::read_be_u32(lab, labels_path);
  if (lab_magic != kIdxLabelsMagic)
    throw DataError("bad idx labels magic in " + labels_path);
  const std::uint32_t lab_count = detail::read_be_u32(lab, labels_path);
  if (lab_count != count)
    throw DataError("idx count mismatch: " + std::to_string(count) + " images vs " +
                    std::to_string(lab_count) + " labels");

  Dataset ds;
  ds.image = {rows, cols, 1};
  ds.item_dim = static_cast<std::size_t>(rows) * cols;
  ds.items = Tensor<float>::zeros({count, ds.item_dim});
  ds.labels.resize(count);

  std::vector<unsigned char> buf(ds.item_dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!img) throw DataError("idx images payload truncated at item " + std::to_string(i));
    float* dst = ds.items.row(i);
    for (std::size_t j = 0; j < ds.item_dim; ++j) dst[j] = static_cast<float>(buf[j]) / 255.0f;
    char l;
    lab.read(&l, 1);
    if (!lab) throw DataError("idx labels payload truncated at item " + std::to_string(i));
    ds.labels[i] = static_cast<int>(static_cast<unsigned char>(l));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic shape images: one grayscale primitive per image at random
// position/size/intensity. Class k selects the k-th primitive.

/// Rasterizes primitive `cls` (0 disk, 1 square, 2 cross, 3 ring) into a
/// size x size image.
inline void draw_primitive(float* img, std::size_t size, std::size_t cls, std::int64_t cx,
                           std::int64_t cy, std::int64_t radius, float intensity) {
  const std::int64_t s = static_cast<std::int64_t>(size);
  auto put = [&](std::int64_t x, std::int64_t y) {
    if (x >= 0 && x < s && y >= 0 && y < s) img[y * s + x] = intensity;
  };
  switch (cls) {
    case 0:  // disk
      for (std::int64_t y = cy - radius; y <= cy + radius; ++y)
        for (std::int64_t x = cx - radius; x <= cx + radius; ++x)
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) put(x, y);
      break;
    case 1:  // square
      for (std::int64_t y = cy - radius; y <= cy + radius; ++y)
        for (std::int64_t x = cx - radius; x <= cx + radius; ++x) put(x, y);
      break;
    case 2:  // cross, two pixels thick
      for (std::int64_t t = -radius; t <= radius; ++t) {
        put(cx + t, cy);
        put(cx, cy + t);
        put(cx + t, cy + 1);
        put(cx + 1, cy + t);
      }
      break;
    case 3:  // ring
      for (std::int64_t y = cy - radius; y <= cy + radius; ++y)
        for (std::int64_t x = cx - radius; x <= cx + radius; ++x) {
          const std::int64_t rr = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          const std::int64_t inner = (radius * 3) / 5;
          if (rr <= radius * radius && rr > inner * inner) put(x, y);
        }
      break;
    default:
      throw ConfigError("synthetic_shapes supports at most 4 classes");
  }
}

namespace detail {

inline void draw_shape(float* img, std::size_t size, std::size_t cls, Rng& rng) {
  const std::int64_t radius = 2 + static_cast<std::int64_t>(rng.below(size / 3 - 1));
  const std::int64_t cx = radius + static_cast<std::int64_t>(rng.below(size - 2 * radius));
  const std::int64_t cy = radius + static_cast<std::int64_t>(rng.below(size - 2 * radius));
  const float intensity = 0.5f + 0.5f * static_cast<float>(rng.uniform());
  draw_primitive(img, size, cls, cx, cy, radius, intensity);
}

}  // namespace detail

inline Dataset make_shapes(std::size_t num_classes, std::size_t items_per_class,
                           std::size_t image_size, std::uint64_t seed) {
  if (image_size < 8) throw ConfigError("synthetic_shapes needs image_size >= 8");
  if (num_classes < 1 || num_classes > 4)
    throw ConfigError("synthetic_shapes supports 1..4 classes");
  Dataset ds;
  ds.image = {image_size, image_size, 1};
  ds.item_dim = image_size * image_size;
  const std::size_t n = num_classes * items_per_class;
  ds.items = Tensor<float>::zeros({n, ds.item_dim});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % num_classes;
    Rng rng = stream_rng(seed, "shapes-item", i);
    detail::draw_shape(ds.items.row(i), image_size, cls, rng);
    ds.labels[i] = static_cast<int>(cls);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian mixture over vectors; mode index doubles as the label.
// For dim == 2 the centers sit evenly on a circle, otherwise on random
// directions at the same radius.

inline Dataset make_mixture(std::size_t num_classes, std::size_t items_per_class, std::size_t dim,
                            double center_scale, double noise_std, std::uint64_t seed) {
  if (num_classes < 1) throw ConfigError("synthetic_mixture needs at least one mode");
  if (dim < 1) throw ConfigError("synthetic_mixture needs dim >= 1");
  Tensor<double> centers = Tensor<double>::zeros({num_classes, dim});
  if (dim == 2) {
    for (std::size_t k = 0; k < num_classes; ++k) {
      const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(k) /
                           static_cast<double>(num_classes);
      centers.at(k, 0) = center_scale * std::cos(angle);
      centers.at(k, 1) = center_scale * std::sin(angle);
    }
  } else {
    Rng crng = stream_rng(seed, "mixture-centers");
    for (std::size_t k = 0; k < num_classes; ++k) {
      double norm_sq = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        centers.at(k, j) = crng.gaussian();
        norm_sq += centers.at(k, j) * centers.at(k, j);
      }
      const double scale = center_scale / std::sqrt(norm_sq);
      for (std::size_t j = 0; j < dim; ++j) centers.at(k, j) *= scale;
    }
  }
  Dataset ds;
  ds.item_dim = dim;
  const std::size_t n = num_classes * items_per_class;
  ds.items = Tensor<float>::zeros({n, dim});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % num_classes;
    Rng rng = stream_rng(seed, "mixture-item", i);
    float* dst = ds.items.row(i);
    for (std::size_t j = 0; j < dim; ++j)
      dst[j] = static_cast<float>(centers.at(cls, j) + noise_std * rng.gaussian());
    ds.labels[i] = static_cast<int>(cls);
  }
  return ds;
}

inline Dataset load_dataset(const DatasetSpec& spec) {
  if (spec.kind == "mnist_idx") return load_mnist_idx(spec.images_path, spec.labels_path);
  if (spec.kind == "synthetic_shapes")
    return make_shapes(spec.num_classes, spec.items_per_class, spec.image_size, spec.seed);
  if (spec.kind == "synthetic_mixture")
    return make_mixture(spec.num_classes, spec.items_per_class, spec.dim, spec.center_scale,
                        spec.noise_std, spec.seed);
  throw ConfigError("unknown dataset kind '" + spec.kind + "'");
}

/// Deterministic head/tail split (items were generated class-interleaved,
/// so both sides stay class-balanced).
inline void split_dataset(const Dataset& ds, std::size_t holdout, Dataset& train, Dataset& held) {
  if (holdout >= ds.size()) throw UsageError("holdout larger than dataset");
  const std::size_t n_train = ds.size() - holdout;
  train.image = held.image = ds.image;
  train.item_dim = held.item_dim = ds.item_dim;
  train.items = Tensor<float>::zeros({n_train, ds.item_dim});
  held.items = Tensor<float>::zeros({holdout, ds.item_dim});
  std::copy(ds.items.data.begin(), ds.items.data.begin() + n_train * ds.item_dim,
            train.items.data.begin());
  std::copy(ds.items.data.begin() + n_train * ds.item_dim, ds.items.data.end(),
            held.items.data.begin());
  train.labels.assign(ds.labels.begin(), ds.labels.begin() + n_train);
  held.labels.assign(ds.labels.begin() + n_train, ds.labels.end());
}

// ---------------------------------------------------------------------------
// PGM (P5, maxval 255) image output and read-back.

inline std::string encode_pgm(const float* pixels, std::size_t height, std::size_t width) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (std::size_t i = 0; i < height * width; ++i) {
    const float v = std::clamp(pixels[i], 0.0f, 1.0f);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
  }
  return out;
}

inline void write_pgm(const std::string& path, const float* pixels, std::size_t height,
                      std::size_t width) {
  write_file(path, encode_pgm(pixels, height, width));
}

/// Grid of images concatenated row-major with 1-pixel separators.
inline void write_pgm_grid(const std::string& path, const Tensor<float>& images,
                           std::size_t height, std::size_t width) {
  const std::size_t n = images.rows();
  if (n == 0) throw UsageError("cannot write an empty image grid");
  const std::size_t cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = (n + cols - 1) / cols;
  const std::size_t gw = cols * width + (cols - 1);
  const std::size_t gh = rows * height + (rows - 1);
  std::vector<float> grid(gw * gh, 1.0f);  // separators render white
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gr = i / cols, gc = i % cols;
    const std::size_t oy = gr * (height + 1), ox = gc * (width + 1);
    const float* src = images.row(i);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) grid[(oy + y) * gw + ox + x] = src[y * width + x];
  }
  write_pgm(path, grid.data(), gh, gw);
}

struct PgmImage {
  std::size_t height = 0, width = 0;
  std::vector<float> pixels;
};

inline PgmImage read_pgm(const std::string& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") throw DataError("not a P5 pgm: " + path);
  const std::size_t width = std::stoul(next_token());
  const std::size_t height = std::stoul(next_token());
  const std::size_t maxval = std::stoul(next_token());
  if (maxval != 255) throw DataError("pgm maxval must be 255: " + path);
  ++pos;  // single whitespace after maxval
  if (pos + height * width > bytes.size()) throw DataError("pgm payload truncated: " + path);
  PgmImage img;
  img.height = height;
  img.width = width;
  img.pixels.resize(height * width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) / 255.0f;
  return img;
}

}  // namespace rcg

#endif  // RCG_DATASET_HPP
