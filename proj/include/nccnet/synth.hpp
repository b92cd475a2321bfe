// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_SYNTH_HPP
#define NCCNET_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nccnet/raster.hpp"

namespace nccnet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Synthetic serial-section stack. Lengths are full-resolution pixels,
// densities are per 10^4 px^2 (blobs) or per 10^6 px^2 (curves).
struct SynthSpec {
  int width = 1152;
  int height = 1152;

  // Tissue: smooth body regions, dark blobs, thin membrane-like curves.
  double body_level = 0.62;
  double body_variation = 0.08;
  double blob_density = 6.0;
  double blob_radius_min = 5.0;
  double blob_radius_max = 14.0;
  double blob_contrast = 0.38;
  // Blobs live for a finite number of sections (Gaussian profile in z with
  // this many sections of scale); 0 keeps every blob in every section.
  double blob_lifetime = 3.0;
  double membrane_density = 25.0;
  double membrane_contrast = 0.25;

  // Geometry: smooth per-section warp with max amplitude max_deformation,
  // plus a rigid translation of translation_step per section index.
  double max_deformation = 18.0;
  double translation_x = 0.0;
  double translation_y = 0.0;

  // Per-section defects.
  double gradient_amplitude = 0.25;  // additive linear ramp + blotch
  double contrast_jitter = 0.25;     // multiplicative ramp
  int occlusions = 3;
  double occlusion_radius = 60.0;
  int scratches = 10;
  double scratch_contrast = 0.45;
  double scratch_width = 3.0;
  double scratch_angle_jitter = 0.03;  // radians, around horizontal
  double noise_sigma = 0.04;

  // No warp, no defects, persistent blobs: every section identical.
  static SynthSpec clean();
};

void validate(const SynthSpec& spec);

// A section maps content at base point b to the section pixel x solving
// x + warp(x) = b, where warp = smooth field - k * translation.
struct SynthStack {
  SynthSpec spec;
  std::uint64_t seed = 0;
  std::vector<Raster> sections;
  std::vector<Raster> warp_x;
  std::vector<Raster> warp_y;
};

SynthStack generate_stack(const SynthSpec& spec, int n_sections, std::uint64_t seed);

float sample_bilinear(const Raster& img, double x, double y);

// Where the content at full-resolution point p of section a appears in
// section b, minus p.
Vec2 truth_displacement(const Raster& warp_x_a, const Raster& warp_y_a, const Raster& warp_x_b,
                        const Raster& warp_y_b, Vec2 p);
Vec2 truth_displacement(const SynthStack& stack, int a, int b, Vec2 p);

// Layout: section_NNN.f32, warp_NNN_x.f32, warp_NNN_y.f32, stack.json.
void save_stack(const SynthStack& stack, const std::filesystem::path& dir);
SynthStack load_stack(const std::filesystem::path& dir, bool with_sections = true);
std::filesystem::path section_path(const std::filesystem::path& dir, int index);

}  // namespace nccnet

#endif  // NCCNET_SYNTH_HPP
