// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_NCC_HPP
#define NCCNET_NCC_HPP

#include <span>
#include <vector>

#include "nccnet/raster.hpp"

namespace nccnet {

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

// Pearson r for every placement of a template inside a source. Entry (u, v)
// is the placement whose top-left template pixel sits on source (u, v).
// Values are clamped to [-1, 1].
struct Correlogram {
  Raster r;

  int width() const noexcept { return r.width(); }
  int height() const noexcept { return r.height(); }
  float at(int x, int y) const noexcept { return r.at(x, y); }
  bool empty() const noexcept { return r.empty(); }
};

// Per-pixel variance below this is treated as zero variance (r := 0).
inline constexpr double kVarianceFloor = 1e-12;

// Serial reference: per-window Pearson with two-pass template statistics.
template <typename T>
Correlogram ncc_direct(const BasicRaster<T>& tmpl, const BasicRaster<T>& source);

// FFT numerator (mean-removed template against source) plus integral-image
// window statistics. FFT extents are the next power of two >= source size.
template <typename T>
Correlogram ncc_fft(const BasicRaster<T>& tmpl, const BasicRaster<T>& source);

// Pearson r of one placement, in double precision, no clamping.
template <typename T>
double ncc_at(const BasicRaster<T>& tmpl, const BasicRaster<T>& source, Point placement);

struct PeakAnalysis {
  Point primary_loc;
  double r_max = 0.0;
  Point secondary_loc;
  double r_second = -1.0;
  double r_delta = 0.0;
  int exclusion = 1;
  // False when the exclusion square covered the whole correlogram; then
  // r_second = -1 and secondary_loc = primary_loc.
  bool has_secondary = false;
};

// Side-`exclusion` square centered on the peak covers offsets
// [-exclusion/2, (exclusion-1)/2] in each axis, clipped at the borders.
PeakAnalysis analyze_peaks(const Correlogram& c, int exclusion);

struct PeakGradient {
  Point location;
  double r = 0.0;
  RasterD d_template;  // same shape as the template
  RasterD d_source;    // same shape as the source, zero outside the window
  bool degenerate = false;  // zero-variance template or window: all-zero gradient
};

// d r(u,v) / d(template pixels) and d r(u,v) / d(source pixels) for each
// requested placement. With t' and w' the mean-removed template and window,
// A = sum t'w', B = sum t'^2, C = sum w'^2 and r = A / sqrt(BC):
//   dr/dT = w' / sqrt(BC) - r t' / B,   dr/dW = t' / sqrt(BC) - r w' / C.
template <typename T>
std::vector<PeakGradient> ncc_peak_gradients(const BasicRaster<T>& tmpl, const BasicRaster<T>& source,
                                             std::span<const Point> locations);

}  // namespace nccnet

#endif  // NCCNET_NCC_HPP
