// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "nccnet/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "nccnet/convnet.hpp"
#include "nccnet/ncc.hpp"
#include "nccnet/random.hpp"
#include "nccnet/trainer.hpp"

namespace nccnet {
namespace {

template <typename T>
BasicRaster<T> random_raster(int w, int h, Rng& rng) {
  BasicRaster<T> r(w, h);
  for (T& v : r.pixels()) v = static_cast<T>(uniform01(rng));
  return r;
}

double rel_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

CheckResult check_fft_vs_direct(double scale) {
  Rng rng(11);
  double worst = 0.0;
  const int sizes[][2] = {{8, 32}, {16, 64}, {24, 80}};
  for (const auto& sz : sizes)
    for (int rep = 0; rep < 4; ++rep) {
      const Raster t = random_raster<float>(sz[0], sz[0], rng);
      const Raster s = random_raster<float>(sz[1], sz[1], rng);
      const Correlogram a = ncc_direct(t, s), b = ncc_fft(t, s);
      for (std::size_t i = 0; i < a.r.size(); ++i)
        worst = std::max(worst, static_cast<double>(std::abs(a.r.pixels()[i] - b.r.pixels()[i])));
    }
  const double tol = 1e-5 * scale;
  return {"ncc_fft vs ncc_direct (max abs diff)", worst, tol, worst <= tol};
}

CheckResult check_ncc_gradient(double scale) {
  Rng rng(12);
  const double h = 1e-3;
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    RasterD t = random_raster<double>(8, 8, rng);
    RasterD s = random_raster<double>(16, 16, rng);
    const Point loc{uniform_int(rng, 9), uniform_int(rng, 9)};
    const std::vector<Point> locs{loc};
    const PeakGradient g = ncc_peak_gradients(t, s, locs)[0];
    double gmax = 0.0;
    for (double v : g.d_template.pixels()) gmax = std::max(gmax, std::abs(v));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double keep = t.pixels()[i];
      t.pixels()[i] = keep + h;
      const double up = ncc_at(t, s, loc);
      t.pixels()[i] = keep - h;
      const double dn = ncc_at(t, s, loc);
      t.pixels()[i] = keep;
      worst = std::max(worst, rel_error(g.d_template.pixels()[i], (up - dn) / (2 * h), 1e-3 * gmax));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double keep = s.pixels()[i];
      s.pixels()[i] = keep + h;
      const double up = ncc_at(t, s, loc);
      s.pixels()[i] = keep - h;
      const double dn = ncc_at(t, s, loc);
      s.pixels()[i] = keep;
      worst = std::max(worst, rel_error(g.d_source.pixels()[i], (up - dn) / (2 * h), 1e-3 * gmax));
    }
  }
  const double tol = 1e-4 * scale;
  return {"ncc_peak_gradients vs central differences (max rel err)", worst, tol, worst <= tol};
}

CheckResult check_net_gradient(double scale) {
  NetConfig cfg;
  cfg.levels = 2;
  cfg.base_channels = 2;
  cfg.seed = 5;
  NetParams<double> p = params_cast<double>(init_params(cfg));
  Rng rng(13);
  for (double& v : p.values) v += 0.05 * (uniform01(rng) - 0.5);  // nonzero biases too
  const RasterD img = random_raster<double>(16, 16, rng);
  const RasterD weight = random_raster<double>(16, 16, rng);
  auto loss = [&](const NetParams<double>& q) {
    const RasterD out = infer(q, img);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.pixels()[i] * weight.pixels()[i];
    return s;
  };
  ForwardResult<double> fr = forward(p, img);
  std::vector<double> grads(p.size(), 0.0);
  backward(p, fr.acts, weight, std::span<double>(grads));
  double gmax = 0.0;
  for (double v : grads) gmax = std::max(gmax, std::abs(v));
  const double h = 1e-3;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p.values[i];
    p.values[i] = keep + h;
    const double up = loss(p);
    p.values[i] = keep - h;
    const double dn = loss(p);
    p.values[i] = keep;
    worst = std::max(worst, rel_error(grads[i], (up - dn) / (2 * h), 1e-3 * gmax));
  }
  const double tol = 1e-4 * scale;
  return {"network backward vs central differences (max rel err)", worst, tol, worst <= tol};
}

CheckResult check_adam_first_step(double scale) {
  Rng rng(14);
  const double lr = 5e-4;
  std::vector<float> params(64), grads(64);
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = static_cast<float>(uniform(rng, -1, 1));
    grads[i] = static_cast<float>(uniform(rng, -2, 2));
  }
  std::vector<float> before = params;
  OptimState st = OptimState::zeros(params.size());
  adam_step(params, grads, st, lr);
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double expected = -lr * (grads[i] > 0 ? 1.0 : -1.0);
    worst = std::max(worst, std::abs((static_cast<double>(params[i]) - before[i]) - expected) / lr);
  }
  const double tol = 1e-3 * scale;
  return {"adam first step == -lr*sign(g) (max rel err)", worst, tol, worst <= tol};
}

CheckResult check_roundtrips(double scale) {
  Rng rng(15);
  Raster img = random_raster<float>(17, 9, rng);
  const Raster back = decode_f32(encode_f32(img));
  double worst = back == img ? 0.0 : 1.0;

  Raster q(13, 7);
  for (float& v : q.pixels()) v = static_cast<float>(uniform_int(rng, 256)) / 255.0f;
  const auto tmp = std::filesystem::temp_directory_path() / "nccnet_selfcheck_roundtrip.pgm";
  save_pgm(q, tmp);
  const Raster qb = load_pgm(tmp);
  std::filesystem::remove(tmp);
  for (std::size_t i = 0; i < q.size(); ++i)
    worst = std::max(worst, static_cast<double>(std::abs(q.pixels()[i] - qb.pixels()[i])));
  const double tol = 0.0 * scale;
  return {"f32 and PGM round-trips (max abs diff)", worst, tol, worst <= tol && scale > 0.0};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(double tolerance_scale) {
  return {check_fft_vs_direct(tolerance_scale), check_ncc_gradient(tolerance_scale),
          check_net_gradient(tolerance_scale), check_adam_first_step(tolerance_scale),
          check_roundtrips(tolerance_scale)};
}

}  // namespace nccnet
