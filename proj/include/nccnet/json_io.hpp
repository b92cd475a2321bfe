// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_JSON_IO_HPP
#define NCCNET_JSON_IO_HPP

#include <json.hpp>
#include <string>

#include "nccnet/convnet.hpp"
#include "nccnet/harness.hpp"
#include "nccnet/preprocess.hpp"
#include "nccnet/synth.hpp"
#include "nccnet/trainer.hpp"

namespace nccnet {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NetConfig, levels, base_channels, kernel, block_convs, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, batch_size, lr, max_iters, exclusion_train,
                                                template_size, source_size, seed, combined_step, clip_norm,
                                                checkpoint_every)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BandpassConfig, sigma_low, sigma_high)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GridSpec, edge, margin)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MatchConfig, downsample, template_size, source_size,
                                                exclusion_eval, truth_tolerance, bandpass, tile, overlap)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthSpec, width, height, body_level, body_variation,
                                                blob_density, blob_radius_min, blob_radius_max, blob_contrast,
                                                blob_lifetime, membrane_density, membrane_contrast, max_deformation,
                                                translation_x, translation_y, gradient_amplitude, contrast_jitter,
                                                occlusions, occlusion_radius, scratches, scratch_contrast,
                                                scratch_width, scratch_angle_jitter, noise_sigma)

// Parses `j` into T, rejecting keys T does not know about.
template <typename T>
T parse_strict(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object()) throw ArgumentError(what + ": expected a JSON object");
  const nlohmann::json known = T{};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ArgumentError(what + ": unknown key '" + key + "'");
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(what + ": " + e.what());
  }
}

}  // namespace nccnet

#endif  // NCCNET_JSON_IO_HPP
