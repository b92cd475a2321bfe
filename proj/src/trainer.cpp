// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "nccnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace nccnet {

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 2) throw ArgumentError("TrainConfig.batch_size must be >= 2");
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw ArgumentError("TrainConfig.lr must be finite and >= 0");
  if (cfg.max_iters < 0) throw ArgumentError("TrainConfig.max_iters must be >= 0");
  if (cfg.exclusion_train < 1) throw ArgumentError("TrainConfig.exclusion_train must be >= 1");
  if (cfg.template_size < 1 || cfg.template_size >= cfg.source_size)
    throw ArgumentError("TrainConfig requires 0 < template_size < source_size");
  if (!(cfg.clip_norm > 0.0)) throw ArgumentError("TrainConfig.clip_norm must be > 0");
  if (cfg.checkpoint_every < 0) throw ArgumentError("TrainConfig.checkpoint_every must be >= 0");
}

Point planted_peak(const Provenance& p, int template_size, int source_size) {
  const int span = source_size - template_size;  // correlogram extent - 1
  Point o{p.template_x - p.source_x, p.template_y - p.source_y};
  for (int q = 0; q < p.source_rotation; ++q) o = {o.y, span - o.x};
  return o;
}

std::vector<PairSample> make_batch(const TrainingSet& data, const TrainConfig& cfg, Rng& rng) {
  validate(cfg);
  if (data.sections.empty()) throw ArgumentError("make_batch: empty dataset");
  const int n = static_cast<int>(data.sections.size());
  for (const Raster& s : data.sections)
    if (s.width() < cfg.source_size || s.height() < cfg.source_size)
      throw ArgumentError("make_batch: section " + std::to_string(s.width()) + "x" + std::to_string(s.height()) +
                          " is smaller than source_size " + std::to_string(cfg.source_size));
  std::vector<PairSample> batch;
  batch.reserve(cfg.batch_size);
  for (int b = 0; b < cfg.batch_size; ++b) {
    Provenance p;
    if (n == 1) {
      p.template_section = p.source_section = 0;
    } else {
      const int i = uniform_int(rng, n - 1);
      const bool flip = uniform_int(rng, 2) == 1;
      p.template_section = flip ? i + 1 : i;
      p.source_section = flip ? i : i + 1;
    }
    const Raster& src_sec = data.sections[p.source_section];
    const Raster& tpl_sec = data.sections[p.template_section];
    p.source_x = uniform_int(rng, src_sec.width() - cfg.source_size + 1);
    p.source_y = uniform_int(rng, src_sec.height() - cfg.source_size + 1);
    const int span = cfg.source_size - cfg.template_size + 1;
    p.template_x = p.source_x + uniform_int(rng, span);
    p.template_y = p.source_y + uniform_int(rng, span);
    p.template_rotation = p.source_rotation = uniform_int(rng, 4);
    PairSample s;
    s.tmpl = rotate90(crop(tpl_sec, {p.template_x, p.template_y, cfg.template_size}), p.template_rotation);
    s.source = rotate90(crop(src_sec, {p.source_x, p.source_y, cfg.source_size}), p.source_rotation);
    s.provenance = p;
    batch.push_back(std::move(s));
  }
  return batch;
}

std::vector<int> random_derangement(int n, Rng& rng) {
  if (n < 2) throw ArgumentError("a derangement needs at least 2 elements");
  std::vector<int> perm(n);
  for (;;) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[uniform_int(rng, i + 1)]);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) ok = perm[i] != i;
    if (ok) return perm;
  }
}

std::vector<PairSample> permute_batch(const std::vector<PairSample>& batch, Rng& rng) {
  if (batch.size() < 2) throw ArgumentError("permute_batch: batch must hold at least 2 pairs");
  const std::vector<int> perm = random_derangement(static_cast<int>(batch.size()), rng);
  std::vector<PairSample> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const PairSample& t = batch[i];
    const PairSample& s = batch[perm[i]];
    PairSample p;
    p.tmpl = t.tmpl;
    p.source = s.source;
    p.provenance = t.provenance;
    p.provenance.source_section = s.provenance.source_section;
    p.provenance.source_x = s.provenance.source_x;
    p.provenance.source_y = s.provenance.source_y;
    p.provenance.source_rotation = s.provenance.source_rotation;
    out.push_back(std::move(p));
  }
  return out;
}

LossGrad gap_loss(const Correlogram& c, int exclusion) {
  LossGrad lg;
  lg.peaks = analyze_peaks(c, exclusion);
  lg.loss = -(lg.peaks.r_max - lg.peaks.r_second);
  lg.grad.push_back({lg.peaks.primary_loc, -1.0});
  if (lg.peaks.has_secondary) lg.grad.push_back({lg.peaks.secondary_loc, 1.0});
  return lg;
}

LossGrad dissimilar_loss(const Correlogram& c) {
  LossGrad lg;
  lg.peaks = analyze_peaks(c, 1);
  lg.loss = lg.peaks.r_max;
  lg.grad.push_back({lg.peaks.primary_loc, 1.0});
  return lg;
}

void adam_step(std::span<float> params, std::span<const float> grads, OptimState& state, double lr,
               const AdamConfig& adam) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_step: params, grads and optimizer state differ in size");
  ++state.step;
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = adam.beta1 * state.m[i] + (1.0 - adam.beta1) * g;
    const double v = adam.beta2 * state.v[i] + (1.0 - adam.beta2) * g * g;
    state.m[i] = static_cast<float>(m);
    state.v[i] = static_cast<float>(v);
    params[i] = static_cast<float>(params[i] - lr * (m / c1) / (std::sqrt(v / c2) + adam.eps));
  }
}

template <typename T>
PairResult pair_gradient(const NetParams<T>& params, const BasicRaster<T>& tmpl, const BasicRaster<T>& source,
                         PairObjective objective, int exclusion, std::span<T> grads) {
  ForwardResult<T> ft = forward(params, tmpl);
  ForwardResult<T> fs = forward(params, source);
  const Correlogram c = ncc_fft(ft.out, fs.out);
  const LossGrad lg = objective == PairObjective::kSimilar ? gap_loss(c, exclusion) : dissimilar_loss(c);

  std::vector<Point> locs;
  for (const auto& [p, w] : lg.grad) locs.push_back(p);
  const std::vector<PeakGradient> pg = ncc_peak_gradients(ft.out, fs.out, locs);
  BasicRaster<T> gt(tmpl.width(), tmpl.height(), T(0));
  BasicRaster<T> gs(source.width(), source.height(), T(0));
  for (std::size_t k = 0; k < pg.size(); ++k) {
    const double w = lg.grad[k].second;
    if (pg[k].degenerate) continue;
    for (std::size_t i = 0; i < gt.size(); ++i) gt.pixels()[i] += static_cast<T>(w * pg[k].d_template.pixels()[i]);
    for (std::size_t i = 0; i < gs.size(); ++i) gs.pixels()[i] += static_cast<T>(w * pg[k].d_source.pixels()[i]);
  }
  backward(params, ft.acts, gt, grads);
  backward(params, fs.acts, gs, grads);
  return {lg.loss, lg.peaks};
}

template PairResult pair_gradient(const NetParams<float>&, const BasicRaster<float>&, const BasicRaster<float>&,
                                  PairObjective, int, std::span<float>);
template PairResult pair_gradient(const NetParams<double>&, const BasicRaster<double>&, const BasicRaster<double>&,
                                  PairObjective, int, std::span<double>);

namespace {

struct PhaseResult {
  std::vector<float> grad;  // batch mean
  double mean_loss = 0.0;
  double mean_r_max = 0.0;
  double mean_r_delta = 0.0;
};

PhaseResult run_phase(const NetParams<float>& params, const std::vector<PairSample>& batch, PairObjective objective,
                      int exclusion, int iteration) {
  const std::size_t n = batch.size();
  std::vector<std::vector<float>> per_pair(n);
  std::vector<PairResult> results(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    per_pair[i].assign(params.size(), 0.0f);
    results[i] = pair_gradient(params, batch[i].tmpl, batch[i].source, objective, exclusion,
                               std::span<float>(per_pair[i]));
  }
  PhaseResult out;
  out.grad.assign(params.size(), 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(results[i].loss)) {
      const Provenance& p = batch[i].provenance;
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << iteration << ", pair " << i << " (template section "
          << p.template_section << " @" << p.template_x << "," << p.template_y << ", source section "
          << p.source_section << " @" << p.source_x << "," << p.source_y << ", rotation " << p.source_rotation << ")";
      throw TrainingError(msg.str());
    }
    for (std::size_t k = 0; k < params.size(); ++k) out.grad[k] += per_pair[i][k];
    out.mean_loss += results[i].loss;
    out.mean_r_max += results[i].peaks.r_max;
    out.mean_r_delta += results[i].peaks.r_delta;
  }
  const float inv = 1.0f / static_cast<float>(n);
  for (float& g : out.grad) g *= inv;
  out.mean_loss /= static_cast<double>(n);
  out.mean_r_max /= static_cast<double>(n);
  out.mean_r_delta /= static_cast<double>(n);
  for (float g : out.grad)
    if (!std::isfinite(g)) throw TrainingError("non-finite gradient at iteration " + std::to_string(iteration));
  return out;
}

double global_norm(std::span<const float> g) {
  double s = 0.0;
  for (float v : g) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

// Returns true when the gradient was rescaled.
bool clip(std::vector<float>& g, double norm, double max_norm) {
  if (norm <= max_norm) return false;
  const float scale = static_cast<float>(max_norm / norm);
  for (float& v : g) v *= scale;
  return true;
}

}  // namespace

TrainResult train(const TrainingSet& data, const NetConfig& net_cfg, const TrainConfig& cfg,
                  const TrainOptions& opts) {
  validate(cfg);
  validate(net_cfg);
  const int m = size_multiple(net_cfg);
  if (cfg.template_size % m || cfg.source_size % m)
    throw ArgumentError("template_size and source_size must be multiples of " + std::to_string(m));
  TrainResult result;
  result.params = init_params(net_cfg);
  OptimState state = OptimState::zeros(result.params.size());
  Rng rng(cfg.seed);

  for (int it = 0; it < cfg.max_iters; ++it) {
    const std::vector<PairSample> batch = make_batch(data, cfg, rng);
    const std::vector<PairSample> permuted = permute_batch(batch, rng);
    LogRow row;
    row.iteration = it;

    PhaseResult sim = run_phase(result.params, batch, PairObjective::kSimilar, cfg.exclusion_train, it);
    row.gap_loss = sim.mean_loss;
    row.mean_r_max = sim.mean_r_max;
    row.mean_r_delta = sim.mean_r_delta;
    row.grad_norm = global_norm(sim.grad);
    if (cfg.combined_step) {
      PhaseResult dis = run_phase(result.params, permuted, PairObjective::kDissimilar, cfg.exclusion_train, it);
      row.dissim_loss = dis.mean_loss;
      for (std::size_t k = 0; k < sim.grad.size(); ++k) sim.grad[k] += dis.grad[k];
      row.grad_norm = global_norm(sim.grad);
      result.clip_events += clip(sim.grad, row.grad_norm, cfg.clip_norm);
      adam_step(result.params.values, sim.grad, state, cfg.lr);
    } else {
      result.clip_events += clip(sim.grad, row.grad_norm, cfg.clip_norm);
      adam_step(result.params.values, sim.grad, state, cfg.lr);
      PhaseResult dis = run_phase(result.params, permuted, PairObjective::kDissimilar, cfg.exclusion_train, it);
      row.dissim_loss = dis.mean_loss;
      result.clip_events += clip(dis.grad, global_norm(dis.grad), cfg.clip_norm);
      adam_step(result.params.values, dis.grad, state, cfg.lr);
    }
    result.log.push_back(row);
    if (opts.on_iteration) opts.on_iteration(row);
    if (!opts.checkpoint_path.empty() && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0)
      save_checkpoint(result.params, opts.checkpoint_path);
  }
  if (!opts.checkpoint_path.empty()) save_checkpoint(result.params, opts.checkpoint_path);
  return result;
}

HeldOutStats evaluate_pairs(const NetParams<float>& params, const std::vector<PairSample>& pairs,
                            std::span<const int> permutation, int exclusion) {
  if (pairs.empty()) throw ArgumentError("evaluate_pairs: no pairs");
  if (permutation.size() != pairs.size()) throw ArgumentError("evaluate_pairs: permutation size mismatch");
  const std::size_t n = pairs.size();
  std::vector<Raster> out_t(n), out_s(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out_t[i] = infer(params, pairs[i].tmpl);
    out_s[i] = infer(params, pairs[i].source);
  }
  std::vector<PeakAnalysis> sim(n), dis(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    sim[i] = analyze_peaks(ncc_fft(out_t[i], out_s[i]), exclusion);
    dis[i] = analyze_peaks(ncc_fft(out_t[i], out_s[permutation[i]]), exclusion);
  }
  HeldOutStats st;
  for (std::size_t i = 0; i < n; ++i) {
    st.mean_r_delta_similar += sim[i].r_delta;
    st.mean_r_max_similar += sim[i].r_max;
    st.mean_r_max_dissimilar += dis[i].r_max;
  }
  st.mean_r_delta_similar /= static_cast<double>(n);
  st.mean_r_max_similar /= static_cast<double>(n);
  st.mean_r_max_dissimilar /= static_cast<double>(n);
  return st;
}

void write_training_log(const std::vector<LogRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open training log", path.string());
  out << "iteration,gap_loss,dissim_loss,mean_r_max,mean_r_delta,grad_norm\n";
  out.precision(9);
  for (const LogRow& r : rows)
    out << r.iteration << ',' << r.gap_loss << ',' << r.dissim_loss << ',' << r.mean_r_max << ',' << r.mean_r_delta
        << ',' << r.grad_norm << '\n';
  if (!out) throw IoError("training log write failed", path.string());
}

}  // namespace nccnet
