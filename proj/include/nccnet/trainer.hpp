// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_TRAINER_HPP
#define NCCNET_TRAINER_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nccnet/convnet.hpp"
#include "nccnet/ncc.hpp"
#include "nccnet/random.hpp"

namespace nccnet {

struct TrainConfig {
  int batch_size = 8;
  double lr = 0.0005;
  int max_iters = 2000;
  int exclusion_train = 20;
  int template_size = 160;
  int source_size = 512;
  std::uint64_t seed = 1;
  // One optimizer step over both phases instead of one step per phase.
  bool combined_step = false;
  double clip_norm = 10.0;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& cfg);

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Sections at network resolution (already downsampled), in stack order.
struct TrainingSet {
  std::vector<Raster> sections;
};

struct Provenance {
  int template_section = 0;
  int source_section = 0;
  int source_x = 0;
  int source_y = 0;
  int template_x = 0;
  int template_y = 0;
  int template_rotation = 0;  // quarter turns
  int source_rotation = 0;
  bool operator==(const Provenance&) const = default;
};

struct PairSample {
  Raster tmpl;
  Raster source;
  Provenance provenance;
};

// Correlogram location of the planted match for a sample, assuming zero
// displacement between its two sections.
Point planted_peak(const Provenance& p, int template_size, int source_size);

std::vector<PairSample> make_batch(const TrainingSet& data, const TrainConfig& cfg, Rng& rng);

// Uniformly random derangement of [0, n).
std::vector<int> random_derangement(int n, Rng& rng);

// Re-pairs template i with source perm[i] where perm is a derangement.
std::vector<PairSample> permute_batch(const std::vector<PairSample>& batch, Rng& rng);

struct LossGrad {
  double loss = 0.0;
  PeakAnalysis peaks;
  std::vector<std::pair<Point, double>> grad;  // d loss / d r at each location
};

// loss = -(r_max - r_second); d loss/d r is -1 at the primary peak and +1 at
// the secondary peak.
LossGrad gap_loss(const Correlogram& c, int exclusion);

// loss = r_max; d loss/d r is +1 at the primary peak.
LossGrad dissimilar_loss(const Correlogram& c);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimState {
  std::vector<float> m;
  std::vector<float> v;
  long step = 0;

  static OptimState zeros(std::size_t n) { return {std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f), 0}; }
};

void adam_step(std::span<float> params, std::span<const float> grads, OptimState& state, double lr,
               const AdamConfig& adam = {});

// Forward both siamese paths with the same params, correlate, apply the loss
// and backpropagate. Adds the parameter gradient into `grads`.
enum class PairObjective { kSimilar, kDissimilar };

struct PairResult {
  double loss = 0.0;
  PeakAnalysis peaks;
};

template <typename T>
PairResult pair_gradient(const NetParams<T>& params, const BasicRaster<T>& tmpl, const BasicRaster<T>& source,
                         PairObjective objective, int exclusion, std::span<T> grads);

struct LogRow {
  int iteration = 0;
  double gap_loss = 0.0;
  double dissim_loss = 0.0;
  double mean_r_max = 0.0;
  double mean_r_delta = 0.0;
  double grad_norm = 0.0;
};

struct TrainOptions {
  std::filesystem::path checkpoint_path;  // empty: no checkpoints
  std::function<void(const LogRow&)> on_iteration;
};

struct TrainResult {
  NetParams<float> params;
  std::vector<LogRow> log;
  int clip_events = 0;
};

TrainResult train(const TrainingSet& data, const NetConfig& net_cfg, const TrainConfig& cfg,
                  const TrainOptions& opts = {});

struct HeldOutStats {
  double mean_r_delta_similar = 0.0;
  double mean_r_max_similar = 0.0;
  double mean_r_max_dissimilar = 0.0;
};

// Similar pairs as given; dissimilar pairs via the supplied permutation.
HeldOutStats evaluate_pairs(const NetParams<float>& params, const std::vector<PairSample>& pairs,
                            std::span<const int> permutation, int exclusion);

void write_training_log(const std::vector<LogRow>& rows, const std::filesystem::path& path);

}  // namespace nccnet

#endif  // NCCNET_TRAINER_HPP
