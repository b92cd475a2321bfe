// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "nccnet/raster.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace nccnet {

template <typename T>
BasicRaster<T> crop_rect(const BasicRaster<T>& img, int x, int y, int width, int height) {
  if (img.empty()) throw ShapeError("crop of an empty raster");
  if (width < 1 || height < 1) throw ArgumentError("crop size must be positive");
  if (x < 0) throw BoundsError("crop x=" + std::to_string(x) + " is negative");
  if (y < 0) throw BoundsError("crop y=" + std::to_string(y) + " is negative");
  if (x + width > img.width())
    throw BoundsError("crop x+width=" + std::to_string(x + width) + " exceeds width " + std::to_string(img.width()));
  if (y + height > img.height())
    throw BoundsError("crop y+height=" + std::to_string(y + height) + " exceeds height " +
                      std::to_string(img.height()));
  BasicRaster<T> out(width, height);
  for (int r = 0; r < height; ++r) {
    const T* src = img.row(y + r) + x;
    std::copy(src, src + width, out.row(r));
  }
  return out;
}

template <typename T>
BasicRaster<T> crop(const BasicRaster<T>& img, const PatchSpec& spec) {
  return crop_rect(img, spec.x, spec.y, spec.size, spec.size);
}

template <typename T>
BasicRaster<T> rotate90(const BasicRaster<T>& img, int quarter_turns) {
  if (img.width() != img.height())
    throw ShapeError("rotate90 needs a square raster, got " + std::to_string(img.width()) + "x" +
                     std::to_string(img.height()));
  if (quarter_turns < 0 || quarter_turns > 3) throw ArgumentError("quarter_turns must be in {0,1,2,3}");
  const int n = img.width();
  if (quarter_turns == 0) return img;
  BasicRaster<T> out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      switch (quarter_turns) {
        case 1: out.at(x, y) = img.at(n - 1 - y, x); break;
        case 2: out.at(x, y) = img.at(n - 1 - x, n - 1 - y); break;
        default: out.at(x, y) = img.at(y, n - 1 - x); break;
      }
    }
  }
  return out;
}

template <typename T>
BasicRaster<T> downsample(const BasicRaster<T>& img, int factor) {
  if (factor <= 0) throw ArgumentError("downsample factor must be >= 1, got " + std::to_string(factor));
  if (img.empty()) throw ShapeError("downsample of an empty raster");
  if (factor == 1) return img;
  const int ow = img.width() / factor;
  const int oh = img.height() / factor;
  if (ow < 1 || oh < 1) throw ShapeError("raster smaller than one downsample block");
  BasicRaster<T> out(ow, oh);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double acc = 0.0;
      for (int dy = 0; dy < factor; ++dy) {
        const T* r = img.row(oy * factor + dy) + ox * factor;
        for (int dx = 0; dx < factor; ++dx) acc += r[dx];
      }
      out.at(ox, oy) = static_cast<T>(acc * inv);
    }
  }
  return out;
}

template BasicRaster<float> crop(const BasicRaster<float>&, const PatchSpec&);
template BasicRaster<double> crop(const BasicRaster<double>&, const PatchSpec&);
template BasicRaster<float> crop_rect(const BasicRaster<float>&, int, int, int, int);
template BasicRaster<double> crop_rect(const BasicRaster<double>&, int, int, int, int);
template BasicRaster<float> rotate90(const BasicRaster<float>&, int);
template BasicRaster<double> rotate90(const BasicRaster<double>&, int);
template BasicRaster<float> downsample(const BasicRaster<float>&, int);
template BasicRaster<double> downsample(const BasicRaster<double>&, int);

bool all_finite(std::span<const float> values) {
  for (float v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading", path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed", path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed", path.string());
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

// PGM header tokenizer: whitespace separated, '#' comments to end of line.
class PgmHeader {
 public:
  explicit PgmHeader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space();
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) tok.push_back(static_cast<char>(bytes_[pos_++]));
    if (tok.empty()) throw ParseError("unexpected end of PGM header", pos_);
    return tok;
  }

  long number() {
    const std::size_t at = pos_;
    std::string tok = token();
    for (char c : tok)
      if (c < '0' || c > '9') throw ParseError("expected a decimal number in PGM header, got '" + tok + "'", at);
    if (tok.size() > 9) throw ParseError("PGM header number too large", at);
    return std::stol(tok);
  }

  // Exactly one whitespace byte separates the header from the payload.
  std::size_t payload_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw ParseError("missing whitespace after PGM maxval", pos_);
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Raster decode_pgm(std::span<const unsigned char> bytes) {
  PgmHeader header(bytes);
  if (header.token() != "P5") throw ParseError("not a binary PGM (magic P5 expected)", 0);
  const long w = header.number();
  const long h = header.number();
  const long maxval = header.number();
  if (w < 1 || h < 1) throw ParseError("PGM dimensions must be positive", 0);
  if (maxval != 255) throw ParseError("only maxval 255 is supported, got " + std::to_string(maxval), 0);
  const std::size_t start = header.payload_start();
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < start + need)
    throw ParseError("truncated PGM payload: need " + std::to_string(need) + " bytes", bytes.size());
  std::vector<float> data(need);
  for (std::size_t i = 0; i < need; ++i) data[i] = static_cast<float>(bytes[start + i]) / 255.0f;
  return Raster(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

Raster load_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

void save_pgm(const Raster& img, const std::filesystem::path& path) {
  if (img.empty()) throw ShapeError("cannot save an empty raster");
  std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.size());
  for (float v : img.pixels()) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    bytes.push_back(static_cast<unsigned char>(std::lround(c * 255.0f)));
  }
  write_file(path, bytes);
}

std::vector<unsigned char> encode_f32(const Raster& img) {
  if (img.empty()) throw ShapeError("cannot encode an empty raster");
  if (!all_finite(img.pixels())) throw ArgumentError("cannot encode a raster with NaN or Inf values");
  static_assert(sizeof(float) == 4);
  std::vector<unsigned char> out;
  out.reserve(16 + 4 * img.size());
  for (char c : {'N', 'C', 'F', '1'}) out.push_back(static_cast<unsigned char>(c));
  put_u32_le(out, static_cast<std::uint32_t>(img.width()));
  put_u32_le(out, static_cast<std::uint32_t>(img.height()));
  put_u32_le(out, 0);
  for (float v : img.pixels()) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Raster decode_f32(std::span<const unsigned char> bytes) {
  if (bytes.size() < 16) throw ParseError("truncated NCF1 header", bytes.size());
  if (std::memcmp(bytes.data(), "NCF1", 4) != 0) throw ParseError("bad NCF1 magic", 0);
  const std::uint32_t w = read_u32_le(bytes.data() + 4);
  const std::uint32_t h = read_u32_le(bytes.data() + 8);
  if (read_u32_le(bytes.data() + 12) != 0) throw ParseError("NCF1 reserved field must be zero", 12);
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) throw ParseError("implausible NCF1 dimensions", 4);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != 16 + 4 * n)
    throw ParseError("NCF1 payload length mismatch: expected " + std::to_string(4 * n) + " bytes", bytes.size());
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<float>(read_u32_le(bytes.data() + 16 + 4 * i));
  return Raster(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

Raster load_f32(const std::filesystem::path& path) { return decode_f32(read_file(path)); }

void save_f32(const Raster& img, const std::filesystem::path& path) { write_file(path, encode_f32(img)); }

}  // namespace nccnet
