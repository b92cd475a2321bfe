// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_CONVNET_HPP
#define NCCNET_CONVNET_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nccnet/raster.hpp"

namespace nccnet {

// FusionNet-style encoder/decoder: every level has a residual block of three
// 3x3 tanh convolutions (skip from the first to the last), 2x2 max-pooling
// on the way down, nearest-neighbor upsampling + 3x3 tanh conv on the way
// up, and summation (not concatenation) with the encoder output of the same
// level. A final linear 3x3 conv produces one channel.
struct NetConfig {
  int levels = 3;
  int base_channels = 8;
  int kernel = 3;
  int block_convs = 3;
  std::uint64_t seed = 1;
  bool operator==(const NetConfig&) const = default;
};

void validate(const NetConfig& cfg);
inline int channels_at(const NetConfig& cfg, int level) { return cfg.base_channels << level; }
// Input extents must be multiples of this.
inline int size_multiple(const NetConfig& cfg) { return 1 << (cfg.levels - 1); }

struct TensorInfo {
  std::string name;
  std::vector<int> shape;  // {out, in, 3, 3} for weights, {out} for biases
  std::size_t offset = 0;
  std::size_t count = 0;
};

// Declaration order: enc0..enc{L-1} blocks, then for k = L-2..0 the
// up-conv and decoder block, then the output conv. Each conv contributes
// its weight then its bias.
std::vector<TensorInfo> param_layout(const NetConfig& cfg);
std::size_t param_count(const NetConfig& cfg);

template <typename T>
struct NetParams {
  NetConfig config;
  std::vector<TensorInfo> layout;
  std::vector<T> values;

  std::size_t size() const noexcept { return values.size(); }
  std::span<T> tensor(std::size_t i) { return std::span<T>(values).subspan(layout[i].offset, layout[i].count); }
  std::span<const T> tensor(std::size_t i) const {
    return std::span<const T>(values).subspan(layout[i].offset, layout[i].count);
  }
  bool operator==(const NetParams& o) const { return config == o.config && values == o.values; }
};

// Weights ~ U(-1, 1) / sqrt(fan_in), biases zero; deterministic in cfg.seed.
NetParams<float> init_params(const NetConfig& cfg);
NetParams<float> zero_params(const NetConfig& cfg);

template <typename To, typename From>
NetParams<To> params_cast(const NetParams<From>& p) {
  return NetParams<To>{p.config, p.layout, std::vector<To>(p.values.begin(), p.values.end())};
}

// Channel-major feature map.
template <typename T>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int h, int w, T fill = T(0))
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}
  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
  T* channel(int c) noexcept { return data.data() + c * plane(); }
  const T* channel(int c) const noexcept { return data.data() + c * plane(); }
};

// Forward caches; opaque to callers.
template <typename T>
struct Activations {
  struct Block {
    Tensor<T> input, a, b, out;
  };
  int in_width = 0;
  int in_height = 0;
  Tensor<T> input;
  std::vector<Block> enc;
  std::vector<std::vector<int>> pool_argmax;
  std::vector<Tensor<T>> up_input;  // upsampled decoder input per level
  std::vector<Tensor<T>> up_out;    // tanh(upconv(...)) per level
  std::vector<Block> dec;
  Tensor<T> final_input;
};

template <typename T>
struct ForwardResult {
  BasicRaster<T> out;
  Activations<T> acts;
};

template <typename T>
ForwardResult<T> forward(const NetParams<T>& params, const BasicRaster<T>& img);

// Output only, no caches kept.
template <typename T>
BasicRaster<T> infer(const NetParams<T>& params, const BasicRaster<T>& img);

// Adds d loss / d params into grad_params (same layout as params) and
// returns d loss / d input.
template <typename T>
BasicRaster<T> backward(const NetParams<T>& params, const Activations<T>& acts, const BasicRaster<T>& grad_out,
                        std::span<T> grad_params);

// Tiled inference with linear (triangular) blending in the overlap bands.
// Tile origins are multiples of size_multiple(cfg), so interior pixels far
// from any seam equal whole-image inference.
template <typename T>
BasicRaster<T> apply_full_image(const NetParams<T>& params, const BasicRaster<T>& img, int tile, int overlap);

// Layer primitives, exposed for testing and benchmarking.
namespace layers {

// Same-padded 3x3 conv: out(o) = sum_i w(o,i) * in(i) + b(o). GEMM path.
template <typename T>
Tensor<T> conv3x3(const Tensor<T>& in, std::span<const T> weights, std::span<const T> bias, int out_channels);

// Serial reference with explicit loops.
template <typename T>
Tensor<T> conv3x3_reference(const Tensor<T>& in, std::span<const T> weights, std::span<const T> bias,
                            int out_channels);

// Accumulates weight/bias gradients and returns d loss / d in.
template <typename T>
Tensor<T> conv3x3_backward(const Tensor<T>& in, std::span<const T> weights, const Tensor<T>& grad_out,
                           std::span<T> grad_weights, std::span<T> grad_bias);

template <typename T>
Tensor<T> maxpool2(const Tensor<T>& in, std::vector<int>& argmax);
template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& grad_out, const std::vector<int>& argmax, int in_h, int in_w);

template <typename T>
Tensor<T> upsample2(const Tensor<T>& in);
template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_out);

}  // namespace layers

// Checkpoint: "NCW1", u32 little-endian length, canonical JSON with the
// NetConfig and tensor shape manifest, then all values as little-endian
// f32 in declaration order.
void save_checkpoint(const NetParams<float>& params, const std::filesystem::path& path);
NetParams<float> load_checkpoint(const std::filesystem::path& path);
std::vector<unsigned char> encode_checkpoint(const NetParams<float>& params);
NetParams<float> decode_checkpoint(std::span<const unsigned char> bytes);

}  // namespace nccnet

#endif  // NCCNET_CONVNET_HPP
