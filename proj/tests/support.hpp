// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers and independent oracles for the unit tests.

#ifndef NCCNET_TESTS_SUPPORT_HPP
#define NCCNET_TESTS_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <string>

#include "nccnet/raster.hpp"
#include "nccnet/random.hpp"

namespace testing {

template <typename T = float>
nccnet::BasicRaster<T> random_raster(int w, int h, std::uint64_t seed) {
  nccnet::Rng rng(seed);
  nccnet::BasicRaster<T> r(w, h);
  for (T& v : r.pixels()) v = static_cast<T>(nccnet::uniform01(rng));
  return r;
}

// Plain scalar Pearson r of the template against the window at (u, v),
// written from the textbook formula with no shared code.
template <typename T>
double pearson_window(const nccnet::BasicRaster<T>& t, const nccnet::BasicRaster<T>& s, int u, int v) {
  const int n = t.width() * t.height();
  double mt = 0, mw = 0;
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x) {
      mt += t.at(x, y);
      mw += s.at(u + x, v + y);
    }
  mt /= n;
  mw /= n;
  double num = 0, dt = 0, dw = 0;
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x) {
      const double a = t.at(x, y) - mt, b = s.at(u + x, v + y) - mw;
      num += a * b;
      dt += a * a;
      dw += b * b;
    }
  if (dt / n < 1e-12 || dw / n < 1e-12) return 0.0;
  return num / std::sqrt(dt * dw);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nccnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

#endif  // NCCNET_TESTS_SUPPORT_HPP
