// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nccnet/convnet.hpp"
#include "nccnet/json_io.hpp"

namespace nccnet {
namespace {

constexpr char kMagic[4] = {'N', 'C', 'W', '1'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

nlohmann::json manifest(const NetConfig& cfg, const std::vector<TensorInfo>& layout) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const TensorInfo& t : layout) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  return {{"config", cfg}, {"tensors", tensors}};
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const NetParams<float>& params) {
  if (params.values.size() != param_count(params.config)) throw ShapeError("checkpoint: parameter count mismatch");
  const std::string header = manifest(params.config, params.layout).dump();
  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  out.reserve(out.size() + 4 * params.values.size());
  for (float v : params.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

NetParams<float> decode_checkpoint(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8) throw ParseError("truncated checkpoint header", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("bad checkpoint magic (NCW1 expected)", 0);
  const std::uint32_t len = get_u32(bytes.data() + 4);
  if (bytes.size() < 8 + static_cast<std::size_t>(len)) throw ParseError("truncated checkpoint manifest", bytes.size());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + len);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest is not valid JSON: ") + e.what(), 8);
  }
  NetConfig cfg;
  try {
    cfg = doc.at("config").get<NetConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint config: ") + e.what(), 8);
  }
  NetParams<float> p = zero_params(cfg);
  if (doc.at("tensors") != manifest(cfg, p.layout).at("tensors"))
    throw ParseError("checkpoint tensor manifest does not match its config", 8);
  const std::size_t start = 8 + len;
  if (bytes.size() != start + 4 * p.values.size())
    throw ParseError("checkpoint payload length mismatch", bytes.size());
  for (std::size_t i = 0; i < p.values.size(); ++i)
    p.values[i] = std::bit_cast<float>(get_u32(bytes.data() + start + 4 * i));
  return p;
}

void save_checkpoint(const NetParams<float>& params, const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing", path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("checkpoint write failed", path.string());
}

NetParams<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint", path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace nccnet
