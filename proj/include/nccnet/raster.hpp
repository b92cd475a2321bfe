// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_RASTER_HPP
#define NCCNET_RASTER_HPP

#include <cassert>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "nccnet/error.hpp"

namespace nccnet {

/**
 * Single-channel image. Pixels are row-major; x is the column and y the row
 * everywhere in this library, so at(x, y) reads data[y * width + x].
 *
 * A default-constructed raster is empty (0x0) and only serves as a
 * placeholder; every operation rejects empty inputs.
 */
template <typename T>
class BasicRaster {
 public:
  using value_type = T;

  BasicRaster() = default;
  BasicRaster(int width, int height, T fill = T(0)) : width_(width), height_(height) {
    if (width < 1 || height < 1)
      throw ShapeError("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                       std::to_string(height));
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  BasicRaster(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1)
      throw ShapeError("raster dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw ShapeError("raster data length does not match width*height");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int x, int y) noexcept {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& at(int x, int y) const noexcept {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  T* row(int y) noexcept { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const noexcept { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  bool operator==(const BasicRaster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Raster = BasicRaster<float>;
using RasterD = BasicRaster<double>;

template <typename To, typename From>
BasicRaster<To> raster_cast(const BasicRaster<From>& img) {
  std::vector<To> out(img.pixels().begin(), img.pixels().end());
  return BasicRaster<To>(img.width(), img.height(), std::move(out));
}

// Square crop geometry inside a parent raster.
struct PatchSpec {
  int x = 0;
  int y = 0;
  int size = 0;
};

template <typename T>
BasicRaster<T> crop(const BasicRaster<T>& img, const PatchSpec& spec);

// Rectangular variant used by the tiling code.
template <typename T>
BasicRaster<T> crop_rect(const BasicRaster<T>& img, int x, int y, int width, int height);

// Lossless counterclockwise rotation by 90 degrees * quarter_turns.
template <typename T>
BasicRaster<T> rotate90(const BasicRaster<T>& img, int quarter_turns);

// Block-mean downsampling. Trailing rows/columns that do not fill a whole
// block are dropped.
template <typename T>
BasicRaster<T> downsample(const BasicRaster<T>& img, int factor);

// Binary PGM (P5, maxval 255). Intensities map to [0,1] as v/255.
Raster load_pgm(const std::filesystem::path& path);
void save_pgm(const Raster& img, const std::filesystem::path& path);

// "NCF1" raw float format: magic, u32 width, u32 height, u32 reserved (0),
// then width*height little-endian IEEE-754 floats, row-major.
Raster load_f32(const std::filesystem::path& path);
void save_f32(const Raster& img, const std::filesystem::path& path);

// In-memory variants of the decoders; the file loaders wrap these.
Raster decode_pgm(std::span<const unsigned char> bytes);
Raster decode_f32(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_f32(const Raster& img);

bool all_finite(std::span<const float> values);

}  // namespace nccnet

#endif  // NCCNET_RASTER_HPP
