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

#ifndef RCG_CHECKPOINT_HPP
#define RCG_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcg/layers.hpp"
#include "rcg/tensor.hpp"

namespace rcg {

// Container layout: 8-byte magic, u32 little-endian header length, UTF-8
// JSON header {version, config, tensors: name -> {shape, dtype, offset}},
// then raw little-endian f32 payloads back to back in directory order
// (offsets are relative to the end of the header).
inline constexpr char kCheckpointMagic[8] = {'R', 'C', 'G', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json config;
  std::map<std::string, Tensor<float>> tensors;  // sorted by name = directory order
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32_le(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32_le(out, bits);
}

inline float get_f32_le(const unsigned char* p) {
  const std::uint32_t bits = get_u32_le(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json dir = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : ckpt.tensors) {
    dir[name] = {{"shape", tensor.shape}, {"dtype", "f32"}, {"offset", offset}};
    offset += 4ull * tensor.size();
  }
  const nlohmann::json header = {
      {"version", kCheckpointVersion}, {"config", ckpt.config}, {"tensors", dir}};
  const std::string header_str = header.dump();

  std::string out;
  out.reserve(12 + header_str.size() + offset);
  out.append(kCheckpointMagic, 8);
  detail::put_u32_le(out, static_cast<std::uint32_t>(header_str.size()));
  out += header_str;
  for (const auto& [name, tensor] : ckpt.tensors)
    for (float v : tensor.data) detail::put_f32_le(out, v);
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes, const std::string& origin) {
  auto fail = [&origin](const std::string& why) -> void {
    throw DataError("checkpoint " + origin + ": " + why);
  };
  if (bytes.size() < 12) fail("shorter than magic and header length");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) fail("bad magic");
  const std::uint32_t header_len =
      detail::get_u32_le(reinterpret_cast<const unsigned char*>(bytes.data()) + 8);
  if (12ull + header_len > bytes.size()) fail("header length exceeds file size");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(12, header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.contains("version") || header["version"].get<std::uint32_t>() != kCheckpointVersion)
    fail("version mismatch");
  if (!header.contains("tensors") || !header["tensors"].is_object()) fail("missing tensor directory");

  Checkpoint ckpt;
  ckpt.config = header.value("config", nlohmann::json::object());

  const std::size_t payload_start = 12 + header_len;
  const std::size_t payload_size = bytes.size() - payload_start;
  std::uint64_t expect_offset = 0;
  // nlohmann objects iterate in key order, which is the directory order the
  // writer used; offsets must tile the payload contiguously.
  for (const auto& [name, entry] : header["tensors"].items()) {
    if (!entry.contains("shape") || !entry.contains("dtype") || !entry.contains("offset"))
      fail("tensor '" + name + "' missing shape/dtype/offset");
    if (entry["dtype"].get<std::string>() != "f32")
      fail("tensor '" + name + "' has unsupported dtype");
    const std::vector<std::size_t> shape = entry["shape"].get<std::vector<std::size_t>>();
    const std::uint64_t offset = entry["offset"].get<std::uint64_t>();
    if (offset != expect_offset)
      fail("tensor '" + name + "' offset " + std::to_string(offset) +
           " does not match expected " + std::to_string(expect_offset));
    const std::uint64_t nbytes = 4ull * numel(shape);
    if (offset + nbytes > payload_size) fail("payload truncated inside tensor '" + name + "'");
    Tensor<float> t = Tensor<float>::zeros(shape);
    const unsigned char* src =
        reinterpret_cast<const unsigned char*>(bytes.data()) + payload_start + offset;
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = detail::get_f32_le(src + 4 * i);
    ckpt.tensors.emplace(name, std::move(t));
    expect_offset = offset + nbytes;
  }
  if (expect_offset != payload_size)
    fail("trailing bytes after last tensor (" + std::to_string(payload_size - expect_offset) +
         " extra)");
  return ckpt;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file(path), path);
}

/// Snapshot of a network's parameters keyed by name.
template <typename Net>
Checkpoint checkpoint_of(Net& net, nlohmann::json config) {
  Checkpoint ckpt;
  ckpt.config = std::move(config);
  for (const auto& p : net.params()) ckpt.tensors.emplace(p.name, *p.value);
  return ckpt;
}

/// Loads tensors into an already-built network; names and shapes must match
/// the directory exactly.
template <typename Net>
void load_params(Net& net, const Checkpoint& ckpt) {
  auto params = net.params();
  if (params.size() != ckpt.tensors.size())
    throw DataError("checkpoint has " + std::to_string(ckpt.tensors.size()) +
                    " tensors, network expects " + std::to_string(params.size()));
  for (auto& p : params) {
    const auto it = ckpt.tensors.find(p.name);
    if (it == ckpt.tensors.end()) throw DataError("checkpoint missing tensor '" + p.name + "'");
    if (it->second.shape != p.value->shape)
      throw DataError("checkpoint tensor '" + p.name + "' has shape " +
                      shape_str(it->second.shape) + ", network expects " +
                      shape_str(p.value->shape));
    *p.value = it->second;
  }
}

}  // namespace rcg

#endif  // RCG_CHECKPOINT_HPP
