// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "nccnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "nccnet/json_io.hpp"
#include "nccnet/random.hpp"

namespace nccnet {

SynthSpec SynthSpec::clean() {
  SynthSpec s;
  s.blob_lifetime = 0.0;
  s.max_deformation = 0.0;
  s.gradient_amplitude = 0.0;
  s.contrast_jitter = 0.0;
  s.occlusions = 0;
  s.scratches = 0;
  s.noise_sigma = 0.0;
  return s;
}

void validate(const SynthSpec& s) {
  if (s.width < 16 || s.height < 16) throw ArgumentError("SynthSpec: sections must be at least 16x16");
  if (s.blob_density < 0 || s.membrane_density < 0) throw ArgumentError("SynthSpec: densities must be >= 0");
  if (!(s.blob_radius_min > 0) || s.blob_radius_max < s.blob_radius_min)
    throw ArgumentError("SynthSpec: need 0 < blob_radius_min <= blob_radius_max");
  if (s.blob_lifetime < 0) throw ArgumentError("SynthSpec: blob_lifetime must be >= 0");
  if (s.max_deformation < 0 || s.max_deformation > 0.1 * std::min(s.width, s.height))
    throw ArgumentError("SynthSpec: max_deformation must be in [0, 10% of the section size]");
  if (s.occlusions < 0 || s.scratches < 0) throw ArgumentError("SynthSpec: defect counts must be >= 0");
  if (s.noise_sigma < 0 || s.scratch_width <= 0 || s.occlusion_radius <= 0)
    throw ArgumentError("SynthSpec: invalid defect parameters");
}

float sample_bilinear(const Raster& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = std::min(static_cast<int>(x), img.width() - 2 < 0 ? 0 : img.width() - 2);
  const int y0 = std::min(static_cast<int>(y), img.height() - 2 < 0 ? 0 : img.height() - 2);
  const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx;
  const double bot = img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx;
  return static_cast<float>(top * (1 - fy) + bot * fy);
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Wave {
  double kx, ky, phase, amp;
};

double eval_waves(const std::vector<Wave>& waves, double x, double y) {
  double v = 0.0;
  for (const Wave& w : waves) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
  return v;
}

std::vector<Wave> random_waves(Rng& rng, int count, double lambda_min, double lambda_max, double total_amp) {
  std::vector<Wave> waves(count);
  double sum = 0.0;
  for (Wave& w : waves) {
    const double lambda = uniform(rng, lambda_min, lambda_max);
    const double dir = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / lambda;
    w = {k * std::cos(dir), k * std::sin(dir), uniform(rng, 0.0, 2.0 * std::numbers::pi), uniform(rng, 0.5, 1.0)};
    sum += w.amp;
  }
  for (Wave& w : waves) w.amp *= sum > 0 ? total_amp / sum : 0.0;
  return waves;
}

struct Blob {
  double cx, cy, rx, ry, cos_a, sin_a, depth, zc;
};

struct Curve {
  std::vector<Vec2> pts;
};

// Stamps max(layer, value * profile) for a soft ellipse.
void stamp_blob(Raster& layer, const Blob& b, double weight) {
  const double r = std::max(b.rx, b.ry) + 2.0;
  const int x0 = std::max(0, static_cast<int>(b.cx - r)), x1 = std::min(layer.width() - 1, static_cast<int>(b.cx + r));
  const int y0 = std::max(0, static_cast<int>(b.cy - r)), y1 = std::min(layer.height() - 1, static_cast<int>(b.cy + r));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - b.cx, dy = y - b.cy;
      const double u = (dx * b.cos_a + dy * b.sin_a) / b.rx;
      const double v = (-dx * b.sin_a + dy * b.cos_a) / b.ry;
      const double d = std::sqrt(u * u + v * v);
      // Soft edge about 1.5 px wide at the rim.
      const double edge = std::clamp((1.0 - d) * std::min(b.rx, b.ry) / 1.5 + 0.5, 0.0, 1.0);
      const double val = weight * b.depth * edge;
      float& p = layer.at(x, y);
      p = std::max(p, static_cast<float>(val));
    }
}

void stamp_curve(Raster& layer, const Curve& c, double sigma, double value) {
  const double r = 3.0 * sigma;
  for (const Vec2& p : c.pts) {
    const int x0 = std::max(0, static_cast<int>(p.x - r)), x1 = std::min(layer.width() - 1, static_cast<int>(p.x + r));
    const int y0 = std::max(0, static_cast<int>(p.y - r)), y1 = std::min(layer.height() - 1, static_cast<int>(p.y + r));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
        float& q = layer.at(x, y);
        q = std::max(q, static_cast<float>(value * std::exp(-0.5 * d2 / (sigma * sigma))));
      }
  }
}

struct Base {
  int margin = 0;
  std::vector<Wave> body;
  std::vector<Blob> blobs;
  Raster membranes;
};

Base make_base(const SynthSpec& s, int n_sections, Rng& rng) {
  Base base;
  const double t = std::hypot(s.translation_x, s.translation_y);
  base.margin = static_cast<int>(std::ceil(s.max_deformation + (n_sections - 1) * t)) + 4;
  const int cw = s.width + 2 * base.margin, ch = s.height + 2 * base.margin;
  const double area = static_cast<double>(cw) * ch;
  base.body = random_waves(rng, 5, 200.0, 800.0, s.body_variation);

  const int n_blobs = static_cast<int>(std::lround(s.blob_density * area / 1e4));
  base.blobs.reserve(n_blobs);
  for (int i = 0; i < n_blobs; ++i) {
    Blob b;
    b.cx = uniform(rng, 0, cw);
    b.cy = uniform(rng, 0, ch);
    b.rx = uniform(rng, s.blob_radius_min, s.blob_radius_max);
    b.ry = b.rx * uniform(rng, 0.45, 1.0);
    const double a = uniform(rng, 0, std::numbers::pi);
    b.cos_a = std::cos(a);
    b.sin_a = std::sin(a);
    b.depth = s.blob_contrast * uniform(rng, 0.6, 1.0);
    b.zc = uniform(rng, -1.0, n_sections);
    base.blobs.push_back(b);
  }

  base.membranes = Raster(cw, ch, 0.0f);
  const int n_curves = static_cast<int>(std::lround(s.membrane_density * area / 1e6));
  for (int i = 0; i < n_curves; ++i) {
    Curve c;
    Vec2 p{uniform(rng, 0, cw), uniform(rng, 0, ch)};
    double heading = uniform(rng, 0, 2.0 * std::numbers::pi);
    double turn = 0.0;
    const double length = uniform(rng, 120.0, 420.0);
    for (double walked = 0.0; walked < length; walked += 1.0) {
      c.pts.push_back(p);
      turn = 0.9 * turn + 0.02 * normal(rng);
      heading += turn;
      p.x += std::cos(heading);
      p.y += std::sin(heading);
    }
    stamp_curve(base.membranes, c, 1.1, s.membrane_contrast * uniform(rng, 0.7, 1.0));
  }
  return base;
}

// Canvas for section k: body minus blobs (weighted by z presence) minus curves.
Raster render_canvas(const SynthSpec& s, const Base& base, int k) {
  const int cw = base.membranes.width(), ch = base.membranes.height();
  Raster blobs(cw, ch, 0.0f);
  for (const Blob& b : base.blobs) {
    double w = 1.0;
    if (s.blob_lifetime > 0.0) {
      const double z = (k - b.zc) / s.blob_lifetime;
      w = std::exp(-0.5 * z * z);
    }
    if (w > 0.02) stamp_blob(blobs, b, w);
  }
  Raster canvas(cw, ch);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x)
      canvas.at(x, y) = static_cast<float>(s.body_level + eval_waves(base.body, x, y) - blobs.at(x, y) -
                                           base.membranes.at(x, y));
  return canvas;
}

void apply_defects(const SynthSpec& s, Raster& img, Rng& rng) {
  const int w = img.width(), h = img.height();
  const double half = 0.5 * std::max(w, h);
  auto ramp = [&](double angle) {
    const double c = std::cos(angle), sn = std::sin(angle);
    return [=](int x, int y) { return ((x - 0.5 * w) * c + (y - 0.5 * h) * sn) / half; };
  };

  if (s.gradient_amplitude > 0.0 || s.contrast_jitter > 0.0) {
    const auto add_ramp = ramp(uniform(rng, 0, 2.0 * std::numbers::pi));
    const auto gain_ramp = ramp(uniform(rng, 0, 2.0 * std::numbers::pi));
    const double add_amp = s.gradient_amplitude * uniform(rng, 0.5, 1.0);
    const double gain_amp = s.contrast_jitter * uniform(rng, 0.5, 1.0);
    const double bx = uniform(rng, 0, w), by = uniform(rng, 0, h), bs = 0.2 * half * uniform(rng, 0.7, 1.3);
    const double b_amp = s.gradient_amplitude * uniform(rng, -1.0, 1.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double blotch = b_amp * std::exp(-0.5 * ((x - bx) * (x - bx) + (y - by) * (y - by)) / (bs * bs));
        float& p = img.at(x, y);
        p = static_cast<float>((p - s.body_level) * (1.0 + gain_amp * gain_ramp(x, y)) + s.body_level +
                               add_amp * add_ramp(x, y) + blotch);
      }
  }

  for (int i = 0; i < s.scratches; ++i) {
    const double angle = s.scratch_angle_jitter * normal(rng);
    const double length = uniform(rng, 0.3, 1.0) * w;
    const double cx = uniform(rng, 0, w), cy = uniform(rng, 0, h);
    const double sigma = 0.5 * s.scratch_width;
    const double value = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * s.scratch_contrast * uniform(rng, 0.7, 1.0);
    const double slope = std::tan(angle);
    const int x0 = std::max(0, static_cast<int>(cx - 0.5 * length)), x1 = std::min(w - 1, static_cast<int>(cx + 0.5 * length));
    const double rad = 3.0 * sigma;
    for (int x = x0; x <= x1; ++x) {
      const double yc = cy + (x - cx) * slope;
      for (int y = std::max(0, static_cast<int>(yc - rad)); y <= std::min(h - 1, static_cast<int>(yc + rad) + 1); ++y) {
        const double d = (y - yc) * std::cos(angle);
        img.at(x, y) += static_cast<float>(value * std::exp(-0.5 * d * d / (sigma * sigma)));
      }
    }
  }

  for (int i = 0; i < s.occlusions; ++i) {
    const double cx = uniform(rng, 0, w), cy = uniform(rng, 0, h);
    const double rx = s.occlusion_radius * uniform(rng, 0.5, 1.5), ry = s.occlusion_radius * uniform(rng, 0.5, 1.5);
    const double fill = uniform01(rng) < 0.5 ? 0.18 : 0.92;
    const int xa = std::max(0, static_cast<int>(cx - rx - 2)), xb = std::min(w - 1, static_cast<int>(cx + rx + 2));
    const int ya = std::max(0, static_cast<int>(cy - ry - 2)), yb = std::min(h - 1, static_cast<int>(cy + ry + 2));
    for (int y = ya; y <= yb; ++y)
      for (int x = xa; x <= xb; ++x) {
        const double d = std::hypot((x - cx) / rx, (y - cy) / ry);
        const double m = std::clamp((1.0 - d) * std::min(rx, ry) / 2.0 + 0.5, 0.0, 1.0);
        float& p = img.at(x, y);
        p = static_cast<float>(p * (1.0 - m) + fill * m);
      }
  }

  if (s.noise_sigma > 0.0)
    for (float& p : img.pixels()) p += static_cast<float>(s.noise_sigma * normal(rng));
  for (float& p : img.pixels()) p = std::clamp(p, 0.0f, 1.0f);
}

}  // namespace

SynthStack generate_stack(const SynthSpec& spec, int n_sections, std::uint64_t seed) {
  validate(spec);
  if (n_sections < 1) throw ArgumentError("generate_stack: need at least one section");
  Rng rng(splitmix(seed));
  const Base base = make_base(spec, n_sections, rng);

  SynthStack stack;
  stack.spec = spec;
  stack.seed = seed;
  stack.sections.resize(n_sections);
  stack.warp_x.resize(n_sections);
  stack.warp_y.resize(n_sections);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_sections; ++k) {
    Rng srng(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(k) + 1)));
    const double lmin = 0.6 * std::max(spec.width, spec.height), lmax = 1.5 * std::max(spec.width, spec.height);
    const auto wx = random_waves(srng, 3, lmin, lmax, spec.max_deformation);
    const auto wy = random_waves(srng, 3, lmin, lmax, spec.max_deformation);
    Raster mx(spec.width, spec.height), my(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        mx.at(x, y) = static_cast<float>(eval_waves(wx, x, y) - k * spec.translation_x);
        my.at(x, y) = static_cast<float>(eval_waves(wy, x, y) - k * spec.translation_y);
      }
    const Raster canvas = render_canvas(spec, base, k);
    Raster sec(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        sec.at(x, y) = sample_bilinear(canvas, x + base.margin + mx.at(x, y), y + base.margin + my.at(x, y));
    apply_defects(spec, sec, srng);
    stack.sections[k] = std::move(sec);
    stack.warp_x[k] = std::move(mx);
    stack.warp_y[k] = std::move(my);
  }
  return stack;
}

Vec2 truth_displacement(const Raster& wxa, const Raster& wya, const Raster& wxb, const Raster& wyb, Vec2 p) {
  const Vec2 target{p.x + sample_bilinear(wxa, p.x, p.y), p.y + sample_bilinear(wya, p.x, p.y)};
  Vec2 q = p;
  for (int it = 0; it < 100; ++it) {
    const Vec2 next{target.x - sample_bilinear(wxb, q.x, q.y), target.y - sample_bilinear(wyb, q.x, q.y)};
    const double step = std::hypot(next.x - q.x, next.y - q.y);
    q = next;
    if (step < 1e-6) break;
  }
  return {q.x - p.x, q.y - p.y};
}

Vec2 truth_displacement(const SynthStack& stack, int a, int b, Vec2 p) {
  const int n = static_cast<int>(stack.warp_x.size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw ArgumentError("truth_displacement: section index out of range");
  return truth_displacement(stack.warp_x[a], stack.warp_y[a], stack.warp_x[b], stack.warp_y[b], p);
}

std::filesystem::path section_path(const std::filesystem::path& dir, int index) {
  char name[32];
  std::snprintf(name, sizeof name, "section_%03d.f32", index);
  return dir / name;
}

namespace {

std::filesystem::path warp_path(const std::filesystem::path& dir, int index, char axis) {
  char name[32];
  std::snprintf(name, sizeof name, "warp_%03d_%c.f32", index, axis);
  return dir / name;
}

}  // namespace

void save_stack(const SynthStack& stack, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory", dir.string());
  const int n = static_cast<int>(stack.sections.size());
  for (int k = 0; k < n; ++k) {
    save_f32(stack.sections[k], section_path(dir, k));
    save_f32(stack.warp_x[k], warp_path(dir, k, 'x'));
    save_f32(stack.warp_y[k], warp_path(dir, k, 'y'));
  }
  const nlohmann::json doc = {{"format", "nccnet-stack-1"}, {"sections", n}, {"seed", stack.seed}, {"spec", stack.spec}};
  std::ofstream out(dir / "stack.json", std::ios::trunc);
  if (!out) throw IoError("cannot write", (dir / "stack.json").string());
  out << doc.dump(2) << '\n';
}

SynthStack load_stack(const std::filesystem::path& dir, bool with_sections) {
  std::ifstream in(dir / "stack.json");
  if (!in) throw IoError("cannot open stack manifest", (dir / "stack.json").string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stack.json: ") + e.what(), 0);
  }
  SynthStack stack;
  stack.spec = parse_strict<SynthSpec>(doc.at("spec"), "stack.json spec");
  stack.seed = doc.at("seed").get<std::uint64_t>();
  const int n = doc.at("sections").get<int>();
  for (int k = 0; k < n; ++k) {
    if (with_sections) stack.sections.push_back(load_f32(section_path(dir, k)));
    stack.warp_x.push_back(load_f32(warp_path(dir, k, 'x')));
    stack.warp_y.push_back(load_f32(warp_path(dir, k, 'y')));
  }
  return stack;
}

}  // namespace nccnet
