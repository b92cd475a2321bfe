// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_RANDOM_HPP
#define NCCNET_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace nccnet {

// The standard distributions are implementation-defined; these helpers keep
// seeded output identical across standard libraries.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Integer in [0, n).
inline int uniform_int(Rng& rng, int n) {
  const int v = static_cast<int>(uniform01(rng) * n);
  return v < n ? v : n - 1;
}

// Box-Muller; consumes two draws per call.
inline double normal(Rng& rng) {
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace nccnet

#endif  // NCCNET_RANDOM_HPP
