// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_HARNESS_HPP
#define NCCNET_HARNESS_HPP

#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nccnet/convnet.hpp"
#include "nccnet/ncc.hpp"
#include "nccnet/preprocess.hpp"
#include "nccnet/synth.hpp"

namespace nccnet {

// Triangular lattice anchored on the section center. Full-resolution pixels.
struct GridSpec {
  double edge = 400.0;
  int margin = 0;
  bool operator==(const GridSpec&) const = default;
};

// Rows are edge*sqrt(3)/2 apart, odd rows shifted by edge/2; coordinates
// are rounded and nodes closer than `margin` to any border are dropped.
std::vector<Point> make_grid(int width, int height, const GridSpec& spec);

enum class Condition { kRaw, kBandpass, kConvnet };
std::string to_string(Condition c);
Condition condition_from_string(const std::string& s);

enum class Label { kTrue, kFalse, kUnknown };
std::string to_string(Label l);
Label label_from_string(const std::string& s);

// Template/source sizes are at downsampled resolution.
struct MatchConfig {
  int downsample = 3;
  int template_size = 32;
  int source_size = 96;
  int exclusion_eval = 5;
  double truth_tolerance = 10.0;  // full-resolution pixels
  BandpassConfig bandpass;
  int tile = 128;
  int overlap = 16;
  bool operator==(const MatchConfig&) const = default;
};

void validate(const MatchConfig& cfg);

// Whole-section preprocessing at matching resolution: downsample, then the
// condition's filter (bandpass sigmas scaled by 1/downsample, or tiled
// convnet inference).
Raster prepare_section(const Raster& section, Condition condition, const MatchConfig& cfg,
                       const NetParams<float>* params = nullptr);

struct MatchRecord {
  Point node;
  double dx = 0.0;  // full resolution
  double dy = 0.0;
  double norm = 0.0;
  double r_max = 0.0;
  double r_delta = 0.0;
  std::optional<Vec2> truth;
  Label label = Label::kUnknown;
  bool flagged = false;
  Condition condition = Condition::kRaw;
  std::string pair_id;
};

struct SkippedNode {
  Point node;
  std::string reason;
};

struct MatchOutput {
  std::vector<MatchRecord> records;
  std::vector<SkippedNode> skipped;
};

// Template crop from `tmpl_prepared` and source crop from `src_prepared`,
// both centered on each node. Displacements are reported at full resolution.
MatchOutput match_pair(const Raster& tmpl_prepared, const Raster& src_prepared, std::span<const Point> nodes,
                       const MatchConfig& cfg, Condition condition, const std::string& pair_id = "");

// Sets truth and label from a ground-truth callback.
template <typename TruthFn>
void label_records(std::vector<MatchRecord>& records, TruthFn truth_at, double tolerance) {
  for (MatchRecord& r : records) {
    const Vec2 t = truth_at(Vec2{static_cast<double>(r.node.x), static_cast<double>(r.node.y)});
    r.truth = t;
    const double err = std::hypot(r.dx - t.x, r.dy - t.y);
    r.label = err > tolerance ? Label::kFalse : Label::kTrue;
  }
}

struct NeighborFlags {
  std::vector<bool> flagged;
  std::vector<bool> insufficient;  // fewer than 3 neighbors within radius
};

// Flags records whose displacement differs by more than `threshold` from the
// componentwise median displacement of the other nodes within `radius`.
NeighborFlags flag_neighbor_outliers(std::span<const MatchRecord> records, double radius, double threshold = 50.0);

enum class Criterion { kNorm, kRMax, kRDelta };
std::string to_string(Criterion c);
double criterion_value(const MatchRecord& r, Criterion c);

struct CurvePoint {
  double threshold = 0.0;
  double true_rejected_fraction = 0.0;
  double error_rate = 0.0;  // false among kept; 0 when nothing is kept
  int kept = 0;
  int rejected = 0;
  bool degenerate = false;  // nothing kept
};

// r_max / r_delta: reject criterion < t. norm: reject criterion > t.
std::vector<CurvePoint> rejection_curve(std::span<const MatchRecord> records, Criterion criterion,
                                        std::span<const double> thresholds);

// Thresholds that visit every distinct outcome of the rejection rule: each
// distinct value plus one step past the far end.
std::vector<double> threshold_candidates(std::span<const MatchRecord> records, Criterion criterion);

// Smallest true-match rejection fraction over the thresholds whose kept set
// has no false matches.
std::optional<CurvePoint> best_zero_error_point(std::span<const CurvePoint> curve);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<int> true_counts;
  std::vector<int> false_counts;
};

struct GroupSummary {
  Condition condition = Condition::kRaw;
  std::string experiment;
  int total = 0;
  int true_count = 0;
  int false_count = 0;
  double error_pct = 0.0;
  Histogram r_max;
  Histogram r_delta;
  Histogram norm;
};

// Experiment is the pair_id prefix before ':' (the whole id without one).
std::string experiment_of(const std::string& pair_id);

// "adjacent:3-4" for |a-b| == 1, "across:3-5" for 2, "pair:a-b" otherwise.
std::string make_pair_id(int a, int b);
// Section indices encoded in a pair id, if any.
std::optional<std::pair<int, int>> sections_of(const std::string& pair_id);

// Labeled records only; groups ordered by condition then experiment.
std::vector<GroupSummary> summarize(std::span<const MatchRecord> records, int bins = 20);

// Fixed column order: node_x,node_y,dx,dy,norm,r_max,r_delta,label,flagged,condition,pair_id
void write_records_csv(std::span<const MatchRecord> records, const std::filesystem::path& path);
std::vector<MatchRecord> read_records_csv(const std::filesystem::path& path);
std::string records_csv_header();

void write_summary_json(std::span<const GroupSummary> groups, int unknown_excluded, const std::filesystem::path& path);
void write_histograms_csv(std::span<const GroupSummary> groups, const std::filesystem::path& path);
void write_curve_csv(std::span<const CurvePoint> curve, const std::string& condition, const std::string& experiment,
                     Criterion criterion, std::ostream& out, bool header);

// Full-resolution template/source patch pairs around grid nodes with their
// ground truth, for bandpass tuning.
std::vector<LabeledPair> make_labeled_pairs(const SynthStack& stack, int a, int b, std::span<const Point> nodes,
                                            const MatchConfig& cfg);

// Standard bandpass grid spanning sigma_low 0.5..4.0 and sigma_high 2..24
// (full resolution).
std::vector<BandpassConfig> default_sigma_grid();

}  // namespace nccnet

#endif  // NCCNET_HARNESS_HPP
