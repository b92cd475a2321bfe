// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "nccnet/ncc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nccnet/fft_plan.hpp"

namespace nccnet {
namespace {

template <typename T>
void check_shapes(const BasicRaster<T>& tmpl, const BasicRaster<T>& source) {
  if (tmpl.empty() || source.empty()) throw ShapeError("ncc: empty template or source");
  if (tmpl.width() > source.width() || tmpl.height() > source.height())
    throw ShapeError("ncc: template " + std::to_string(tmpl.width()) + "x" + std::to_string(tmpl.height()) +
                     " is larger than source " + std::to_string(source.width()) + "x" +
                     std::to_string(source.height()));
}

// Mean-removed template in double plus its sum of squares.
template <typename T>
struct CenteredTemplate {
  std::vector<double> values;
  double sum_sq = 0.0;
  bool degenerate = false;

  explicit CenteredTemplate(const BasicRaster<T>& tmpl) : values(tmpl.size()) {
    double mean = 0.0;
    for (T v : tmpl.pixels()) mean += v;
    mean /= static_cast<double>(tmpl.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = static_cast<double>(tmpl.pixels()[i]) - mean;
      sum_sq += values[i] * values[i];
    }
    degenerate = sum_sq / static_cast<double>(values.size()) < kVarianceFloor;
  }
};

template <typename T>
std::vector<double> centered_source(const BasicRaster<T>& source) {
  double mean = 0.0;
  for (T v : source.pixels()) mean += v;
  mean /= static_cast<double>(source.size());
  std::vector<double> out(source.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(source.pixels()[i]) - mean;
  return out;
}

float finish_r(double numerator, double t_sum_sq, double w_sum_sq, double n) {
  if (w_sum_sq / n < kVarianceFloor) return 0.0f;
  const double r = numerator / std::sqrt(t_sum_sq * w_sum_sq);
  return static_cast<float>(std::clamp(r, -1.0, 1.0));
}

}  // namespace

template <typename T>
Correlogram ncc_direct(const BasicRaster<T>& tmpl, const BasicRaster<T>& source) {
  check_shapes(tmpl, source);
  const int tw = tmpl.width(), th = tmpl.height();
  const int sw = source.width(), sh = source.height();
  const int cw = sw - tw + 1, ch = sh - th + 1;
  Correlogram out{Raster(cw, ch, 0.0f)};
  const CenteredTemplate<T> t(tmpl);
  if (t.degenerate) return out;
  const std::vector<double> s = centered_source(source);
  const double n = static_cast<double>(tw) * th;

  // Horizontal window sums for every source row, summed term by term.
  std::vector<double> row_sum(static_cast<std::size_t>(sh) * cw, 0.0);
  std::vector<double> row_sum_sq(static_cast<std::size_t>(sh) * cw, 0.0);
  for (int y = 0; y < sh; ++y) {
    const double* srow = s.data() + static_cast<std::size_t>(y) * sw;
    for (int u = 0; u < cw; ++u) {
      double a = 0.0, b = 0.0;
      for (int j = 0; j < tw; ++j) {
        a += srow[u + j];
        b += srow[u + j] * srow[u + j];
      }
      row_sum[static_cast<std::size_t>(y) * cw + u] = a;
      row_sum_sq[static_cast<std::size_t>(y) * cw + u] = b;
    }
  }

  std::vector<double> acc(cw), wsum(cw), wsum_sq(cw);
  for (int v = 0; v < ch; ++v) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(wsum.begin(), wsum.end(), 0.0);
    std::fill(wsum_sq.begin(), wsum_sq.end(), 0.0);
    for (int i = 0; i < th; ++i) {
      const double* srow = s.data() + static_cast<std::size_t>(v + i) * sw;
      const double* trow = t.values.data() + static_cast<std::size_t>(i) * tw;
      for (int j = 0; j < tw; ++j) {
        const double tv = trow[j];
        const double* sp = srow + j;
        for (int u = 0; u < cw; ++u) acc[u] += tv * sp[u];
      }
      const double* rs = row_sum.data() + static_cast<std::size_t>(v + i) * cw;
      const double* rs2 = row_sum_sq.data() + static_cast<std::size_t>(v + i) * cw;
      for (int u = 0; u < cw; ++u) {
        wsum[u] += rs[u];
        wsum_sq[u] += rs2[u];
      }
    }
    float* orow = out.r.row(v);
    for (int u = 0; u < cw; ++u) {
      const double w_var_sum = wsum_sq[u] - wsum[u] * wsum[u] / n;
      orow[u] = finish_r(acc[u], t.sum_sq, w_var_sum, n);
    }
  }
  return out;
}

template <typename T>
Correlogram ncc_fft(const BasicRaster<T>& tmpl, const BasicRaster<T>& source) {
  check_shapes(tmpl, source);
  const int tw = tmpl.width(), th = tmpl.height();
  const int sw = source.width(), sh = source.height();
  const int cw = sw - tw + 1, ch = sh - th + 1;
  Correlogram out{Raster(cw, ch, 0.0f)};
  const CenteredTemplate<T> t(tmpl);
  if (t.degenerate) return out;
  const std::vector<double> s = centered_source(source);
  const double n = static_cast<double>(tw) * th;

  const int rows = fft::next_pow2(sh);
  const int cols = fft::next_pow2(sw);
  fft::Workspace src_ws(rows, cols);
  fft::Workspace tpl_ws(rows, cols);
  std::fill(src_ws.real(), src_ws.real() + static_cast<std::size_t>(rows) * cols, 0.0);
  std::fill(tpl_ws.real(), tpl_ws.real() + static_cast<std::size_t>(rows) * cols, 0.0);
  for (int y = 0; y < sh; ++y)
    std::copy(s.begin() + static_cast<std::ptrdiff_t>(y) * sw, s.begin() + static_cast<std::ptrdiff_t>(y + 1) * sw,
              src_ws.real() + static_cast<std::size_t>(y) * cols);
  for (int y = 0; y < th; ++y)
    std::copy(t.values.begin() + static_cast<std::ptrdiff_t>(y) * tw,
              t.values.begin() + static_cast<std::ptrdiff_t>(y + 1) * tw,
              tpl_ws.real() + static_cast<std::size_t>(y) * cols);
  src_ws.forward();
  tpl_ws.forward();
  const std::size_t n_spec = static_cast<std::size_t>(rows) * src_ws.spectrum_cols();
  std::complex<double>* ps = src_ws.spectrum();
  const std::complex<double>* pt = tpl_ws.spectrum();
  for (std::size_t k = 0; k < n_spec; ++k) ps[k] *= std::conj(pt[k]);
  src_ws.inverse();
  const double scale = 1.0 / (static_cast<double>(rows) * cols);

  // Integral images with a zero first row/column.
  const int iw = sw + 1;
  std::vector<double> ii(static_cast<std::size_t>(sh + 1) * iw, 0.0);
  std::vector<double> ii2(static_cast<std::size_t>(sh + 1) * iw, 0.0);
  for (int y = 0; y < sh; ++y) {
    double run = 0.0, run2 = 0.0;
    for (int x = 0; x < sw; ++x) {
      const double v = s[static_cast<std::size_t>(y) * sw + x];
      run += v;
      run2 += v * v;
      ii[static_cast<std::size_t>(y + 1) * iw + x + 1] = ii[static_cast<std::size_t>(y) * iw + x + 1] + run;
      ii2[static_cast<std::size_t>(y + 1) * iw + x + 1] = ii2[static_cast<std::size_t>(y) * iw + x + 1] + run2;
    }
  }
  auto box = [&](const std::vector<double>& img, int x0, int y0) {
    const std::size_t top = static_cast<std::size_t>(y0) * iw;
    const std::size_t bot = static_cast<std::size_t>(y0 + th) * iw;
    return img[bot + x0 + tw] - img[bot + x0] - img[top + x0 + tw] + img[top + x0];
  };

  for (int v = 0; v < ch; ++v) {
    const double* num_row = src_ws.real() + static_cast<std::size_t>(v) * cols;
    float* orow = out.r.row(v);
    for (int u = 0; u < cw; ++u) {
      const double sum = box(ii, u, v);
      const double sum_sq = box(ii2, u, v);
      orow[u] = finish_r(num_row[u] * scale, t.sum_sq, sum_sq - sum * sum / n, n);
    }
  }
  return out;
}

template <typename T>
double ncc_at(const BasicRaster<T>& tmpl, const BasicRaster<T>& source, Point p) {
  check_shapes(tmpl, source);
  const int tw = tmpl.width(), th = tmpl.height();
  if (p.x < 0 || p.y < 0 || p.x + tw > source.width() || p.y + th > source.height())
    throw BoundsError("ncc_at: placement (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") out of range");
  const double n = static_cast<double>(tw) * th;
  double tm = 0.0, wm = 0.0;
  for (int i = 0; i < th; ++i)
    for (int j = 0; j < tw; ++j) {
      tm += tmpl.at(j, i);
      wm += source.at(p.x + j, p.y + i);
    }
  tm /= n;
  wm /= n;
  double a = 0.0, b = 0.0, c = 0.0;
  for (int i = 0; i < th; ++i)
    for (int j = 0; j < tw; ++j) {
      const double tv = tmpl.at(j, i) - tm;
      const double wv = source.at(p.x + j, p.y + i) - wm;
      a += tv * wv;
      b += tv * tv;
      c += wv * wv;
    }
  if (b / n < kVarianceFloor || c / n < kVarianceFloor) return 0.0;
  return a / std::sqrt(b * c);
}

PeakAnalysis analyze_peaks(const Correlogram& c, int exclusion) {
  if (c.empty()) throw ArgumentError("analyze_peaks: empty correlogram");
  if (exclusion < 1) throw ArgumentError("analyze_peaks: exclusion must be >= 1");
  const int w = c.width(), h = c.height();
  PeakAnalysis pa;
  pa.exclusion = exclusion;
  float best = c.at(0, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (c.at(x, y) > best) {
        best = c.at(x, y);
        pa.primary_loc = {x, y};
      }
  pa.r_max = best;

  const int x0 = pa.primary_loc.x - exclusion / 2, x1 = pa.primary_loc.x + (exclusion - 1) / 2;
  const int y0 = pa.primary_loc.y - exclusion / 2, y1 = pa.primary_loc.y + (exclusion - 1) / 2;
  bool found = false;
  float second = 0.0f;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x >= x0 && x <= x1 && y >= y0 && y <= y1) continue;
      if (!found || c.at(x, y) > second) {
        second = c.at(x, y);
        pa.secondary_loc = {x, y};
        found = true;
      }
    }
  pa.has_secondary = found;
  if (found) {
    pa.r_second = second;
  } else {
    pa.r_second = -1.0;
    pa.secondary_loc = pa.primary_loc;
  }
  pa.r_delta = pa.r_max - pa.r_second;
  return pa;
}

template <typename T>
std::vector<PeakGradient> ncc_peak_gradients(const BasicRaster<T>& tmpl, const BasicRaster<T>& source,
                                             std::span<const Point> locations) {
  check_shapes(tmpl, source);
  const int tw = tmpl.width(), th = tmpl.height();
  const double n = static_cast<double>(tw) * th;
  const CenteredTemplate<T> t(tmpl);
  std::vector<PeakGradient> out;
  out.reserve(locations.size());
  std::vector<double> w(t.values.size());
  for (const Point& p : locations) {
    if (p.x < 0 || p.y < 0 || p.x + tw > source.width() || p.y + th > source.height())
      throw BoundsError("ncc_peak_gradients: location (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                        ") outside the correlogram");
    PeakGradient g;
    g.location = p;
    g.d_template = RasterD(tw, th, 0.0);
    g.d_source = RasterD(source.width(), source.height(), 0.0);

    double wm = 0.0;
    for (int i = 0; i < th; ++i)
      for (int j = 0; j < tw; ++j) wm += source.at(p.x + j, p.y + i);
    wm /= n;
    double a = 0.0, c = 0.0;
    for (int i = 0; i < th; ++i)
      for (int j = 0; j < tw; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * tw + j;
        w[k] = static_cast<double>(source.at(p.x + j, p.y + i)) - wm;
        a += t.values[k] * w[k];
        c += w[k] * w[k];
      }
    if (t.degenerate || c / n < kVarianceFloor) {
      g.degenerate = true;
      out.push_back(std::move(g));
      continue;
    }
    const double b = t.sum_sq;
    const double inv_norm = 1.0 / std::sqrt(b * c);
    g.r = a * inv_norm;
    for (int i = 0; i < th; ++i)
      for (int j = 0; j < tw; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * tw + j;
        g.d_template.at(j, i) = w[k] * inv_norm - g.r * t.values[k] / b;
        g.d_source.at(p.x + j, p.y + i) = t.values[k] * inv_norm - g.r * w[k] / c;
      }
    out.push_back(std::move(g));
  }
  return out;
}

template Correlogram ncc_direct(const BasicRaster<float>&, const BasicRaster<float>&);
template Correlogram ncc_direct(const BasicRaster<double>&, const BasicRaster<double>&);
template Correlogram ncc_fft(const BasicRaster<float>&, const BasicRaster<float>&);
template Correlogram ncc_fft(const BasicRaster<double>&, const BasicRaster<double>&);
template double ncc_at(const BasicRaster<float>&, const BasicRaster<float>&, Point);
template double ncc_at(const BasicRaster<double>&, const BasicRaster<double>&, Point);
template std::vector<PeakGradient> ncc_peak_gradients(const BasicRaster<float>&, const BasicRaster<float>&,
                                                      std::span<const Point>);
template std::vector<PeakGradient> ncc_peak_gradients(const BasicRaster<double>&, const BasicRaster<double>&,
                                                      std::span<const Point>);

}  // namespace nccnet
