// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_PREPROCESS_HPP
#define NCCNET_PREPROCESS_HPP

#include <span>
#include <vector>

#include "nccnet/raster.hpp"

namespace nccnet {

// Sigmas are in full-resolution pixels.
struct BandpassConfig {
  double sigma_low = 2.0;
  double sigma_high = 12.0;
  bool operator==(const BandpassConfig&) const = default;
};

void validate(const BandpassConfig& cfg);

// Normalized 1D Gaussian taps of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

// Index into [0, n) by mirroring about the edge pixels (... 2 1 | 0 1 2 ...).
int reflect_index(int i, int n);

// Separable Gaussian with reflected borders.
template <typename T>
BasicRaster<T> gaussian_blur(const BasicRaster<T>& img, double sigma);

// Difference of Gaussians. When applied after downsampling by `factor`, the
// full-resolution sigmas are divided by `factor`.
template <typename T>
BasicRaster<T> bandpass(const BasicRaster<T>& img, const BandpassConfig& cfg, int factor = 1);

// A template/source pair at full resolution with its known answer: the
// displacement (full-resolution pixels) of the true match from the centered
// placement. The template is cut from the center of `tmpl_context` only after
// filtering, so the filter sees the same surroundings it would see when a
// whole section is preprocessed.
struct LabeledPair {
  Raster tmpl_context;  // same extent as `source`, from the template section
  Raster source;
  int template_size = 0;  // full resolution
  double truth_dx = 0.0;
  double truth_dy = 0.0;
};

struct TuneOptions {
  int downsample_factor = 3;
  // A peak farther than this from the truth (full-resolution pixels) is false.
  double tolerance = 10.0;
};

struct TuneResult {
  BandpassConfig best;
  int best_false_matches = 0;
  std::vector<int> false_matches;  // per grid entry, grid order
};

// Counts false matches of the identity (raw) preprocessing under the same
// protocol as tune_bandpass.
int count_false_matches_raw(std::span<const LabeledPair> pairs, const TuneOptions& opts = {});
int count_false_matches(std::span<const LabeledPair> pairs, const BandpassConfig& cfg, const TuneOptions& opts = {});

// Grid search minimizing the false-match count; ties prefer smaller
// sigma_high, then smaller sigma_low. Candidates are scored in parallel.
TuneResult tune_bandpass(std::span<const LabeledPair> pairs, std::span<const BandpassConfig> grid,
                         const TuneOptions& opts = {});

}  // namespace nccnet

#endif  // NCCNET_PREPROCESS_HPP
