// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "nccnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace nccnet {

std::vector<Point> make_grid(int width, int height, const GridSpec& spec) {
  if (!(spec.edge > 0.0)) throw ArgumentError("GridSpec.edge must be > 0");
  if (spec.margin < 0) throw ArgumentError("GridSpec.margin must be >= 0");
  std::vector<Point> nodes;
  if (width <= 0 || height <= 0) return nodes;
  const double cx = 0.5 * width, cy = 0.5 * height;
  const double row_h = spec.edge * std::sqrt(3.0) / 2.0;
  const int rows = static_cast<int>(std::ceil(height / row_h)) + 1;
  const int cols = static_cast<int>(std::ceil(width / spec.edge)) + 1;
  for (int j = -rows; j <= rows; ++j) {
    const double shift = (j % 2 != 0) ? 0.5 : 0.0;
    const long y = std::lround(cy + j * row_h);
    for (int i = -cols; i <= cols; ++i) {
      const long x = std::lround(cx + (i + shift) * spec.edge);
      if (x < spec.margin || y < spec.margin || x > width - 1 - spec.margin || y > height - 1 - spec.margin) continue;
      nodes.push_back({static_cast<int>(x), static_cast<int>(y)});
    }
  }
  std::sort(nodes.begin(), nodes.end(), [](const Point& a, const Point& b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
  return nodes;
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::kRaw: return "raw";
    case Condition::kBandpass: return "bandpass";
    case Condition::kConvnet: return "convnet";
  }
  return "raw";
}

Condition condition_from_string(const std::string& s) {
  if (s == "raw") return Condition::kRaw;
  if (s == "bandpass") return Condition::kBandpass;
  if (s == "convnet") return Condition::kConvnet;
  throw ArgumentError("unknown condition '" + s + "' (raw|bandpass|convnet)");
}

std::string to_string(Label l) {
  switch (l) {
    case Label::kTrue: return "true";
    case Label::kFalse: return "false";
    case Label::kUnknown: return "unknown";
  }
  return "unknown";
}

Label label_from_string(const std::string& s) {
  if (s == "true") return Label::kTrue;
  if (s == "false") return Label::kFalse;
  if (s == "unknown") return Label::kUnknown;
  throw ArgumentError("unknown label '" + s + "'");
}

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::kNorm: return "norm";
    case Criterion::kRMax: return "r_max";
    case Criterion::kRDelta: return "r_delta";
  }
  return "norm";
}

void validate(const MatchConfig& cfg) {
  if (cfg.downsample < 1) throw ArgumentError("MatchConfig.downsample must be >= 1");
  if (cfg.template_size < 2 || cfg.source_size <= cfg.template_size)
    throw ArgumentError("MatchConfig requires 2 <= template_size < source_size");
  if ((cfg.source_size - cfg.template_size) % 2)
    throw ArgumentError("MatchConfig: source_size - template_size must be even so the template can be centered");
  if (cfg.exclusion_eval < 1) throw ArgumentError("MatchConfig.exclusion_eval must be >= 1");
  if (!(cfg.truth_tolerance > 0)) throw ArgumentError("MatchConfig.truth_tolerance must be > 0");
  validate(cfg.bandpass);
}

Raster prepare_section(const Raster& section, Condition condition, const MatchConfig& cfg,
                       const NetParams<float>* params) {
  validate(cfg);
  Raster ds = downsample(section, cfg.downsample);
  switch (condition) {
    case Condition::kRaw: return ds;
    case Condition::kBandpass: return bandpass(ds, cfg.bandpass, cfg.downsample);
    case Condition::kConvnet:
      if (!params) throw ArgumentError("convnet condition needs network parameters");
      return apply_full_image(*params, ds, cfg.tile, cfg.overlap);
  }
  return ds;
}

MatchOutput match_pair(const Raster& tmpl_prepared, const Raster& src_prepared, std::span<const Point> nodes,
                       const MatchConfig& cfg, Condition condition, const std::string& pair_id) {
  validate(cfg);
  const int f = cfg.downsample, T = cfg.template_size, S = cfg.source_size;
  std::vector<std::optional<MatchRecord>> out(nodes.size());
  std::vector<std::string> reasons(nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nodes.size()); ++i) {
    const Point node = nodes[i];
    const int cx = node.x / f, cy = node.y / f;
    const int tx = cx - T / 2, ty = cy - T / 2, sx = cx - S / 2, sy = cy - S / 2;
    if (tx < 0 || ty < 0 || tx + T > tmpl_prepared.width() || ty + T > tmpl_prepared.height()) {
      reasons[i] = "template crop leaves the section";
      continue;
    }
    if (sx < 0 || sy < 0 || sx + S > src_prepared.width() || sy + S > src_prepared.height()) {
      reasons[i] = "source crop leaves the section";
      continue;
    }
    const Correlogram c = ncc_fft(crop(tmpl_prepared, {tx, ty, T}), crop(src_prepared, {sx, sy, S}));
    const PeakAnalysis pa = analyze_peaks(c, cfg.exclusion_eval);
    MatchRecord r;
    r.node = node;
    r.dx = static_cast<double>(pa.primary_loc.x - (tx - sx)) * f;
    r.dy = static_cast<double>(pa.primary_loc.y - (ty - sy)) * f;
    r.norm = std::hypot(r.dx, r.dy);
    r.r_max = pa.r_max;
    r.r_delta = pa.r_delta;
    r.condition = condition;
    r.pair_id = pair_id;
    out[i] = std::move(r);
  }
  MatchOutput result;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (out[i])
      result.records.push_back(std::move(*out[i]));
    else
      result.skipped.push_back({nodes[i], reasons[i]});
  }
  return result;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

NeighborFlags flag_neighbor_outliers(std::span<const MatchRecord> records, double radius, double threshold) {
  if (!(radius > 0.0)) throw ArgumentError("flag_neighbor_outliers: radius must be > 0");
  NeighborFlags flags;
  flags.flagged.assign(records.size(), false);
  flags.insufficient.assign(records.size(), false);
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<double> nx, ny;
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (j == i) continue;
      const double d = std::hypot(records[i].node.x - records[j].node.x, records[i].node.y - records[j].node.y);
      if (d <= radius) {
        nx.push_back(records[j].dx);
        ny.push_back(records[j].dy);
      }
    }
    if (nx.size() < 3) {
      flags.insufficient[i] = true;
      continue;
    }
    const double dev = std::hypot(records[i].dx - median(nx), records[i].dy - median(ny));
    flags.flagged[i] = dev > threshold;
  }
  return flags;
}

double criterion_value(const MatchRecord& r, Criterion c) {
  switch (c) {
    case Criterion::kNorm: return r.norm;
    case Criterion::kRMax: return r.r_max;
    case Criterion::kRDelta: return r.r_delta;
  }
  return 0.0;
}

std::vector<CurvePoint> rejection_curve(std::span<const MatchRecord> records, Criterion criterion,
                                        std::span<const double> thresholds) {
  int total_true = 0;
  for (const MatchRecord& r : records) {
    if (r.label == Label::kUnknown) throw ArgumentError("rejection_curve: every record must be labeled");
    total_true += r.label == Label::kTrue;
  }
  std::vector<CurvePoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    CurvePoint p;
    p.threshold = t;
    int true_rejected = 0, false_kept = 0;
    for (const MatchRecord& r : records) {
      const double v = criterion_value(r, criterion);
      const bool reject = criterion == Criterion::kNorm ? v > t : v < t;
      if (reject) {
        ++p.rejected;
        true_rejected += r.label == Label::kTrue;
      } else {
        ++p.kept;
        false_kept += r.label == Label::kFalse;
      }
    }
    p.true_rejected_fraction = total_true ? static_cast<double>(true_rejected) / total_true : 0.0;
    p.degenerate = p.kept == 0;
    p.error_rate = p.kept ? static_cast<double>(false_kept) / p.kept : 0.0;
    curve.push_back(p);
  }
  return curve;
}

std::optional<CurvePoint> best_zero_error_point(std::span<const CurvePoint> curve) {
  std::optional<CurvePoint> best;
  for (const CurvePoint& p : curve) {
    if (p.degenerate || p.error_rate > 0.0) continue;
    if (!best || p.true_rejected_fraction < best->true_rejected_fraction) best = p;
  }
  return best;
}

std::vector<double> threshold_candidates(std::span<const MatchRecord> records, Criterion criterion) {
  std::vector<double> v;
  v.reserve(records.size() + 1);
  for (const MatchRecord& r : records) v.push_back(criterion_value(r, criterion));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (v.empty()) return v;
  if (criterion == Criterion::kNorm)
    v.insert(v.begin(), std::nextafter(v.front(), -HUGE_VAL));
  else
    v.push_back(std::nextafter(v.back(), HUGE_VAL));
  return v;
}

std::string make_pair_id(int a, int b) {
  const int gap = std::abs(a - b);
  const char* exp = gap == 1 ? "adjacent" : gap == 2 ? "across" : "pair";
  return std::string(exp) + ":" + std::to_string(a) + "-" + std::to_string(b);
}

std::optional<std::pair<int, int>> sections_of(const std::string& pair_id) {
  const auto colon = pair_id.find(':');
  const auto dash = pair_id.find('-', colon == std::string::npos ? 0 : colon + 1);
  if (colon == std::string::npos || dash == std::string::npos) return std::nullopt;
  const std::string a = pair_id.substr(colon + 1, dash - colon - 1), b = pair_id.substr(dash + 1);
  auto digits = [](const std::string& s) {
    return !s.empty() && s.size() < 9 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!digits(a) || !digits(b)) return std::nullopt;
  return std::make_pair(std::stoi(a), std::stoi(b));
}

std::string experiment_of(const std::string& pair_id) {
  const auto pos = pair_id.find(':');
  return pos == std::string::npos ? pair_id : pair_id.substr(0, pos);
}

namespace {

Histogram make_hist(double lo, double hi, int bins) {
  return Histogram{lo, hi, std::vector<int>(bins, 0), std::vector<int>(bins, 0)};
}

void add(Histogram& h, double v, bool is_true) {
  const int bins = static_cast<int>(h.true_counts.size());
  int b = static_cast<int>(std::floor((v - h.lo) / (h.hi - h.lo) * bins));
  b = std::clamp(b, 0, bins - 1);
  (is_true ? h.true_counts : h.false_counts)[b] += 1;
}

}  // namespace

std::vector<GroupSummary> summarize(std::span<const MatchRecord> records, int bins) {
  if (bins < 1) throw ArgumentError("summarize: bins must be >= 1");
  std::map<std::pair<int, std::string>, GroupSummary> groups;
  for (const MatchRecord& r : records) {
    if (r.label == Label::kUnknown) continue;
    const auto key = std::make_pair(static_cast<int>(r.condition), experiment_of(r.pair_id));
    auto it = groups.find(key);
    if (it == groups.end()) {
      GroupSummary g;
      g.condition = r.condition;
      g.experiment = key.second;
      g.r_max = make_hist(-1.0, 1.0, bins);
      g.r_delta = make_hist(0.0, 2.0, bins);
      g.norm = make_hist(0.0, 200.0, bins);
      it = groups.emplace(key, std::move(g)).first;
    }
    GroupSummary& g = it->second;
    const bool is_true = r.label == Label::kTrue;
    ++g.total;
    (is_true ? g.true_count : g.false_count) += 1;
    add(g.r_max, r.r_max, is_true);
    add(g.r_delta, r.r_delta, is_true);
    add(g.norm, r.norm, is_true);
  }
  std::vector<GroupSummary> out;
  for (auto& [key, g] : groups) {
    g.error_pct = g.total ? 100.0 * g.false_count / g.total : 0.0;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<LabeledPair> make_labeled_pairs(const SynthStack& stack, int a, int b, std::span<const Point> nodes,
                                            const MatchConfig& cfg) {
  validate(cfg);
  const int n = static_cast<int>(stack.sections.size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw ArgumentError("make_labeled_pairs: section index out of range");
  const int f = cfg.downsample;
  const int tf = cfg.template_size * f, sf = cfg.source_size * f;
  const Raster& ta = stack.sections[a];
  const Raster& sb = stack.sections[b];
  std::vector<LabeledPair> pairs;
  for (const Point& node : nodes) {
    const int cx = node.x / f * f, cy = node.y / f * f;
    const int sx = cx - sf / 2, sy = cy - sf / 2;
    if (sx < 0 || sy < 0 || sx + sf > std::min(ta.width(), sb.width()) || sy + sf > std::min(ta.height(), sb.height()))
      continue;
    const Vec2 t = truth_displacement(stack, a, b, Vec2{static_cast<double>(node.x), static_cast<double>(node.y)});
    pairs.push_back({crop(ta, {sx, sy, sf}), crop(sb, {sx, sy, sf}), tf, t.x, t.y});
  }
  return pairs;
}

std::vector<BandpassConfig> default_sigma_grid() {
  const double lows[] = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
  const double highs[] = {3.0, 4.5, 6.0, 9.0, 12.0, 18.0, 25.0};
  std::vector<BandpassConfig> grid;
  for (double lo : lows)
    for (double hi : highs)
      if (lo < hi) grid.push_back({lo, hi});
  return grid;
}

}  // namespace nccnet
