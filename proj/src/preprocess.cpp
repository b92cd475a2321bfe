// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "nccnet/preprocess.hpp"

#include <cmath>
#include <string>

#include "nccnet/ncc.hpp"

namespace nccnet {

void validate(const BandpassConfig& cfg) {
  if (!(cfg.sigma_low > 0.0) || !(cfg.sigma_high > cfg.sigma_low))
    throw ArgumentError("bandpass requires 0 < sigma_low < sigma_high, got " + std::to_string(cfg.sigma_low) +
                        ", " + std::to_string(cfg.sigma_high));
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("gaussian sigma must be > 0, got " + std::to_string(sigma));
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += k[i + radius];
  }
  for (double& v : k) v /= total;
  return k;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <typename T>
BasicRaster<T> gaussian_blur(const BasicRaster<T>& img, double sigma) {
  if (img.empty()) throw ShapeError("gaussian_blur of an empty raster");
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width(), h = img.height();

  std::vector<double> tmp(img.size());
  std::vector<double> line(static_cast<std::size_t>(std::max(w, h)) + 2 * radius);
  for (int y = 0; y < h; ++y) {
    const T* r = img.row(y);
    for (int x = -radius; x < w + radius; ++x) line[x + radius] = r[reflect_index(x, w)];
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < static_cast<int>(k.size()); ++t) acc += k[t] * line[x + t];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  BasicRaster<T> out(w, h);
  for (int x = 0; x < w; ++x) {
    for (int y = -radius; y < h + radius; ++y) line[y + radius] = tmp[static_cast<std::size_t>(reflect_index(y, h)) * w + x];
    for (int y = 0; y < h; ++y) {
      double acc = 0.0;
      for (int t = 0; t < static_cast<int>(k.size()); ++t) acc += k[t] * line[y + t];
      out.at(x, y) = static_cast<T>(acc);
    }
  }
  return out;
}

template <typename T>
BasicRaster<T> bandpass(const BasicRaster<T>& img, const BandpassConfig& cfg, int factor) {
  validate(cfg);
  if (factor < 1) throw ArgumentError("bandpass downsample factor must be >= 1");
  BasicRaster<T> low = gaussian_blur(img, cfg.sigma_low / factor);
  const BasicRaster<T> high = gaussian_blur(img, cfg.sigma_high / factor);
  auto lp = low.pixels();
  auto hp = high.pixels();
  for (std::size_t i = 0; i < lp.size(); ++i) lp[i] -= hp[i];
  return low;
}

template BasicRaster<float> gaussian_blur(const BasicRaster<float>&, double);
template BasicRaster<double> gaussian_blur(const BasicRaster<double>&, double);
template BasicRaster<float> bandpass(const BasicRaster<float>&, const BandpassConfig&, int);
template BasicRaster<double> bandpass(const BasicRaster<double>&, const BandpassConfig&, int);

namespace {

bool is_false_match(const Raster& context, const Raster& source, const LabeledPair& pair, const TuneOptions& opts) {
  const int f = opts.downsample_factor;
  const int t = pair.template_size / f;
  const int off = (context.width() - t) / 2;
  if (t < 2 || off < 0) throw ArgumentError("labeled pair: template does not fit its context");
  const Correlogram c = ncc_fft(crop(context, {off, off, t}), source);
  const PeakAnalysis pa = analyze_peaks(c, 1);
  const double cx = (source.width() - t) / 2, cy = (source.height() - t) / 2;
  const double ex = (pa.primary_loc.x - cx) * f - pair.truth_dx;
  const double ey = (pa.primary_loc.y - cy) * f - pair.truth_dy;
  return std::hypot(ex, ey) > opts.tolerance;
}

template <typename Prep>
int count_with(std::span<const LabeledPair> pairs, const TuneOptions& opts, Prep prep) {
  std::vector<char> flags(pairs.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
    const LabeledPair& p = pairs[i];
    const Raster t = prep(downsample(p.tmpl_context, opts.downsample_factor));
    const Raster s = prep(downsample(p.source, opts.downsample_factor));
    flags[i] = is_false_match(t, s, p, opts) ? 1 : 0;
  }
  int count = 0;
  for (char f : flags) count += f;
  return count;
}

}  // namespace

int count_false_matches_raw(std::span<const LabeledPair> pairs, const TuneOptions& opts) {
  return count_with(pairs, opts, [](Raster r) { return r; });
}

int count_false_matches(std::span<const LabeledPair> pairs, const BandpassConfig& cfg, const TuneOptions& opts) {
  validate(cfg);
  return count_with(pairs, opts, [&](const Raster& r) { return bandpass(r, cfg, opts.downsample_factor); });
}

TuneResult tune_bandpass(std::span<const LabeledPair> pairs, std::span<const BandpassConfig> grid,
                         const TuneOptions& opts) {
  if (pairs.empty()) throw ArgumentError("tune_bandpass: no labeled pairs");
  if (grid.empty()) throw ArgumentError("tune_bandpass: empty sigma grid");
  for (const BandpassConfig& cfg : grid) validate(cfg);
  TuneResult result;
  result.false_matches.reserve(grid.size());
  for (const BandpassConfig& cfg : grid) result.false_matches.push_back(count_false_matches(pairs, cfg, opts));

  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const int fi = result.false_matches[i], fb = result.false_matches[best];
    const bool better = fi < fb || (fi == fb && (grid[i].sigma_high < grid[best].sigma_high ||
                                                 (grid[i].sigma_high == grid[best].sigma_high &&
                                                  grid[i].sigma_low < grid[best].sigma_low)));
    if (better) best = i;
  }
  result.best = grid[best];
  result.best_false_matches = result.false_matches[best];
  return result;
}

}  // namespace nccnet
