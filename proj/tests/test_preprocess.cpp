// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nccnet/error.hpp"
#include "nccnet/harness.hpp"
#include "nccnet/preprocess.hpp"
#include "nccnet/synth.hpp"
#include "support.hpp"

using namespace nccnet;

namespace {

// Dense 2D convolution with the outer-product kernel and the same mirrored
// border rule (mirror about the edge pixel), written independently.
RasterD dense_blur(const RasterD& img, double sigma) {
  const int rad = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k1(2 * rad + 1);
  double s = 0;
  for (int i = -rad; i <= rad; ++i) s += k1[i + rad] = std::exp(-i * i / (2 * sigma * sigma));
  for (double& v : k1) v /= s;
  auto mirror = [](int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
  };
  RasterD out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0;
      for (int j = -rad; j <= rad; ++j)
        for (int i = -rad; i <= rad; ++i)
          acc += k1[i + rad] * k1[j + rad] * img.at(mirror(x + i, img.width()), mirror(y + j, img.height()));
      out.at(x, y) = acc;
    }
  return out;
}

double rms(const RasterD& r, int border) {
  double s = 0;
  int n = 0;
  for (int y = border; y < r.height() - border; ++y)
    for (int x = border; x < r.width() - border; ++x, ++n) s += r.at(x, y) * r.at(x, y);
  return std::sqrt(s / n);
}

double total_variation(const RasterD& r) {
  double tv = 0;
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) {
      if (x + 1 < r.width()) tv += std::abs(r.at(x + 1, y) - r.at(x, y));
      if (y + 1 < r.height()) tv += std::abs(r.at(x, y + 1) - r.at(x, y));
    }
  return tv;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("kernel is normalized with radius ceil(3 sigma)") {
    const auto k = gaussian_kernel(1.4);
    CHECK(k.size() == 2 * 5 + 1);
    double s = 0;
    for (double v : k) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(gaussian_kernel(0.0), ArgumentError);
    CHECK_THROWS_AS(gaussian_blur(RasterD(4, 4), -1.0), ArgumentError);
  }

  TEST_CASE("reflect_index mirrors about the edge pixel") {
    CHECK(reflect_index(-1, 5) == 1);
    CHECK(reflect_index(-2, 5) == 2);
    CHECK(reflect_index(5, 5) == 3);
    CHECK(reflect_index(6, 5) == 2);
    CHECK(reflect_index(2, 5) == 2);
    CHECK(reflect_index(-7, 5) == 1);
    CHECK(reflect_index(3, 1) == 0);
  }

  TEST_CASE("blur preserves a constant image") {
    const RasterD img(20, 13, 0.37);
    const RasterD b = gaussian_blur(img, 2.5);
    for (double v : b.pixels()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
  }

  TEST_CASE("impulse response is a sampled Gaussian, symmetric under rotation") {
    RasterD img(41, 41, 0.0);
    img.at(20, 20) = 1.0;
    const RasterD b = gaussian_blur(img, 2.0);
    CHECK(rotate90(b, 1) == b);
    const auto k = gaussian_kernel(2.0);
    CHECK(b.at(20, 20) == doctest::Approx(k[6] * k[6]));
    CHECK(b.at(23, 18) == doctest::Approx(k[9] * k[4]));
  }

  TEST_CASE("separable blur equals a dense 2D convolution") {
    const RasterD img = testing::random_raster<double>(23, 19, 1);
    for (double sigma : {0.7, 1.5, 3.0}) {
      const RasterD a = gaussian_blur(img, sigma), b = dense_blur(img, sigma);
      double worst = 0;
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.pixels()[i] - b.pixels()[i]));
      CHECK(worst <= 1e-6);
    }
  }

  TEST_CASE("blur does not increase total variation") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RasterD img = testing::random_raster<double>(30, 30, 10 + seed);
      CHECK(total_variation(gaussian_blur(img, 1.0 + seed)) <= total_variation(img));
    }
  }

  TEST_CASE("bandpass kills DC and has a center-surround impulse response") {
    const BandpassConfig cfg{1.5, 6.0};
    for (double v : bandpass(RasterD(30, 30, 0.8), cfg).pixels()) CHECK(std::abs(v) <= 1e-12);
    RasterD img(61, 61, 0.0);
    img.at(30, 30) = 1.0;
    const RasterD r = bandpass(img, cfg);
    CHECK(r.at(30, 30) > 0);
    CHECK(r.at(30, 39) < 0);
    CHECK_THROWS_AS(bandpass(img, BandpassConfig{3.0, 2.0}), ArgumentError);
    CHECK_THROWS_AS(bandpass(img, BandpassConfig{0.0, 2.0}), ArgumentError);
  }

  TEST_CASE("bandpass passes mid frequencies over low and high ones") {
    const BandpassConfig cfg{1.0, 4.0};
    auto grating = [](double period) {
      RasterD g(128, 128);
      for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) g.at(x, y) = std::sin(2 * std::numbers::pi * x / period);
      return g;
    };
    const double low = rms(bandpass(grating(128), cfg), 16);
    const double mid = rms(bandpass(grating(12), cfg), 16);
    const double high = rms(bandpass(grating(2.5), cfg), 16);
    CHECK(mid > 3 * low);
    CHECK(mid > 3 * high);
  }

  TEST_CASE("bandpass is linear") {
    const RasterD x = testing::random_raster<double>(32, 32, 2), y = testing::random_raster<double>(32, 32, 3);
    RasterD mix(32, 32);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.pixels()[i] = 2.5 * x.pixels()[i] - 0.75 * y.pixels()[i];
    const BandpassConfig cfg{1.0, 5.0};
    const RasterD a = bandpass(mix, cfg), bx = bandpass(x, cfg), by = bandpass(y, cfg);
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(a.pixels()[i] - (2.5 * bx.pixels()[i] - 0.75 * by.pixels()[i])));
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("bandpass output is nearly zero-mean on a synthetic section") {
    SynthSpec spec;
    spec.width = spec.height = 192;
    const SynthStack st = generate_stack(spec, 1, 4);
    const Raster r = bandpass(st.sections[0], BandpassConfig{2.0, 12.0});
    double s = 0;
    for (float v : r.pixels()) s += v;
    CHECK(std::abs(s / static_cast<double>(r.size())) < 1e-3);
  }

  TEST_CASE("the downsample factor divides the sigmas") {
    const RasterD img = testing::random_raster<double>(40, 40, 5);
    CHECK(bandpass(img, BandpassConfig{3.0, 12.0}, 3) == bandpass(img, BandpassConfig{1.0, 4.0}, 1));
  }

  TEST_CASE("tuning: singleton grid, tie-break and error contract") {
    SynthSpec spec;
    spec.width = spec.height = 480;
    const SynthStack st = generate_stack(spec, 2, 9);
    MatchConfig mc;
    mc.template_size = 24;
    mc.source_size = 64;
    const std::vector<Point> nodes = make_grid(480, 480, GridSpec{60, 100});
    const std::vector<LabeledPair> pairs = make_labeled_pairs(st, 0, 1, nodes, mc);
    REQUIRE(pairs.size() >= 10);

    const std::vector<BandpassConfig> one{{1.5, 9.0}};
    CHECK(tune_bandpass(pairs, one).best == one[0]);

    CHECK_THROWS_AS(tune_bandpass(std::span<const LabeledPair>{}, one), ArgumentError);
    CHECK_THROWS_AS(tune_bandpass(pairs, std::span<const BandpassConfig>{}), ArgumentError);
  }

  TEST_CASE("tuning ties prefer the smaller sigma_high, then the smaller sigma_low") {
    // Clean identical sections: every candidate scores zero false matches.
    SynthSpec spec = SynthSpec::clean();
    spec.width = spec.height = 480;
    const SynthStack st = generate_stack(spec, 2, 9);
    MatchConfig mc;
    mc.template_size = 24;
    mc.source_size = 64;
    const std::vector<LabeledPair> pairs = make_labeled_pairs(st, 0, 1, make_grid(480, 480, GridSpec{60, 100}), mc);
    const std::vector<BandpassConfig> grid{{2.0, 12.0}, {1.0, 12.0}, {2.5, 9.0}, {1.5, 9.0}};
    const TuneResult r = tune_bandpass(pairs, grid);
    CHECK(r.false_matches == std::vector<int>{0, 0, 0, 0});
    CHECK(r.best == grid[3]);
  }

  TEST_CASE("tuned bandpass beats raw on gradient-corrupted pairs") {
    SynthSpec spec;
    spec.width = spec.height = 576;
    spec.gradient_amplitude = 0.6;
    spec.contrast_jitter = 0.5;
    const SynthStack st = generate_stack(spec, 2, 21);
    MatchConfig mc;
    mc.template_size = 24;
    mc.source_size = 72;
    const std::vector<Point> nodes = make_grid(576, 576, GridSpec{48, 110});
    const std::vector<LabeledPair> pairs = make_labeled_pairs(st, 0, 1, nodes, mc);
    const std::vector<BandpassConfig> grid = default_sigma_grid();
    const TuneResult r = tune_bandpass(pairs, grid);
    CHECK(r.best_false_matches <= count_false_matches_raw(pairs));
    CHECK(r.best_false_matches == count_false_matches(pairs, r.best));
  }
}
