// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criteria 5 and 6 reuse the network trained for 4, and 8
// reuses the benchmark stack built for 5.

#include <omp.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "nccnet/harness.hpp"
#include "nccnet/trainer.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace nccnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("CRITERION %d %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs_diff(const Correlogram& a, const Correlogram& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.r.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(a.r.pixels()[i]) - b.r.pixels()[i]));
  return worst;
}

// --- 1: fft vs direct ---------------------------------------------------

void criterion_oracle() {
  const auto t0 = Clock::now();
  const std::pair<int, int> sizes[] = {{8, 32}, {16, 64}, {160, 512}};
  double worst = 0.0;
  std::uint64_t seed = 1;
  for (auto [t, s] : sizes)
    for (int k = 0; k < 100; ++k, seed += 2) {
      const Raster tmpl = testing::random_raster(t, t, seed), src = testing::random_raster(s, s, seed + 1);
      worst = std::max(worst, max_abs_diff(ncc_fft(tmpl, src), ncc_direct(tmpl, src)));
    }
  const double secs = seconds_since(t0);
  report(1, worst <= 1e-5 && secs < 120,
         fmt("ncc_fft vs ncc_direct, 100 pairs at each of (8,32) (16,64) (160,512): max |diff| %.2e (<= 1e-5), "
             "%.1f s (< 120 s)",
             worst, secs));
}

// --- 2: affine invariance ------------------------------------------------

// Inputs are double so the transform itself is exact; a float input would
// be re-rounded after a*x+b, which is a change of data, not of r. The float
// figure is printed for information.
void criterion_invariance() {
  Rng rng(2);
  double worst = 0.0, worst_float = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int t = 4 + uniform_int(rng, 12), s = t + 4 + uniform_int(rng, 40);
    const RasterD tmpl = testing::random_raster<double>(t, t, 100 + k), src = testing::random_raster<double>(s, s, 200 + k);
    const Correlogram base = ncc_fft(tmpl, src);
    const double a = uniform(rng, 0.1, 10.0), b = uniform(rng, -5.0, 5.0);
    RasterD tm = tmpl, sm = src;
    for (double& v : tm.pixels()) v = a * v + b;
    for (double& v : sm.pixels()) v = a * v + b;
    worst = std::max({worst, max_abs_diff(base, ncc_fft(tm, src)), max_abs_diff(base, ncc_fft(tmpl, sm))});

    Raster tf(t, t), tmf(t, t);
    for (std::size_t i = 0; i < tf.size(); ++i) {
      tf.pixels()[i] = static_cast<float>(tmpl.pixels()[i]);
      tmf.pixels()[i] = static_cast<float>(a * tf.pixels()[i] + b);
    }
    Raster sf(s, s);
    for (std::size_t i = 0; i < sf.size(); ++i) sf.pixels()[i] = static_cast<float>(src.pixels()[i]);
    worst_float = std::max(worst_float, max_abs_diff(ncc_fft(tf, sf), ncc_fft(tmf, sf)));
  }
  report(2, worst <= 1e-6,
         fmt("affine maps a*x+b (a in [0.1,10], b in [-5,5]) of template or source, 50 instances: max change %.2e "
             "(<= 1e-6); with float inputs re-rounded after the map: %.2e",
             worst, worst_float));
}

// --- 3: gradients --------------------------------------------------------

double rel(double a, double b, double floor) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}); }

double ncc_gradient_error(std::uint64_t seed) {
  Rng rng(seed);
  const int t = 3 + uniform_int(rng, 8), s = t + 2 + uniform_int(rng, 12);
  RasterD tmpl = testing::random_raster<double>(t, t, seed * 7 + 1);
  RasterD src = testing::random_raster<double>(s, s, seed * 7 + 2);
  const Point loc{uniform_int(rng, s - t + 1), uniform_int(rng, s - t + 1)};
  const Point locs[] = {loc};
  const PeakGradient g = ncc_peak_gradients(tmpl, src, locs)[0];
  double gmax = 0.0;
  for (double v : g.d_template.pixels()) gmax = std::max(gmax, std::abs(v));
  for (double v : g.d_source.pixels()) gmax = std::max(gmax, std::abs(v));
  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](RasterD& img, const RasterD& grad) {
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double keep = img.pixels()[i];
      img.pixels()[i] = keep + h;
      const double up = testing::pearson_window(tmpl, src, loc.x, loc.y);
      img.pixels()[i] = keep - h;
      const double dn = testing::pearson_window(tmpl, src, loc.x, loc.y);
      img.pixels()[i] = keep;
      worst = std::max(worst, rel(grad.pixels()[i], (up - dn) / (2 * h), 1e-3 * gmax));
    }
  };
  probe(tmpl, g.d_template);
  probe(src, g.d_source);
  return worst;
}

double chain_gradient_error(std::uint64_t seed, PairObjective obj) {
  NetConfig cfg;
  cfg.levels = 1;
  cfg.base_channels = 4;
  cfg.seed = seed;
  NetParams<double> p = params_cast<double>(init_params(cfg));
  Rng rng(seed);
  for (double& v : p.values) v += 0.1 * (uniform01(rng) - 0.5);
  const RasterD t = testing::random_raster<double>(8, 8, seed + 10);
  const RasterD s = testing::random_raster<double>(16, 16, seed + 11);
  std::vector<double> g(p.size(), 0.0);
  const PairResult res = pair_gradient<double>(p, t, s, obj, 3, g);
  const Point p1 = res.peaks.primary_loc, p2 = res.peaks.secondary_loc;
  auto loss = [&](const NetParams<double>& q) {
    const RasterD ot = infer(q, t), os = infer(q, s);
    return obj == PairObjective::kSimilar ? -(ncc_at(ot, os, p1) - ncc_at(ot, os, p2)) : ncc_at(ot, os, p1);
  };
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p.values[i];
    p.values[i] = keep + h;
    const double up = loss(p);
    p.values[i] = keep - h;
    const double dn = loss(p);
    p.values[i] = keep;
    worst = std::max(worst, rel(g[i], (up - dn) / (2 * h), 1e-3 * gmax));
  }
  return worst;
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  double ncc_worst = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) ncc_worst = std::max(ncc_worst, ncc_gradient_error(1000 + k));
  double chain_worst = 0.0;
  for (std::uint64_t k = 0; k < 5; ++k)
    for (PairObjective obj : {PairObjective::kSimilar, PairObjective::kDissimilar})
      chain_worst = std::max(chain_worst, chain_gradient_error(50 + k, obj));
  const double secs = seconds_since(t0);
  report(3, ncc_worst <= 1e-4 && chain_worst <= 1e-3 && secs < 300,
         fmt("(a) NCC peak gradient vs central differences, 50 instances: max rel err %.2e (<= 1e-4); "
             "(b) net->NCC->loss chain, levels=1, 8x8/16x16, 10 instances: max rel err %.2e (<= 1e-3); %.1f s",
             ncc_worst, chain_worst, secs));
}

// --- 4: training ---------------------------------------------------------

constexpr int kDownsample = 3;

TrainingSet downsampled(const SynthStack& st) {
  TrainingSet d;
  for (const Raster& s : st.sections) d.sections.push_back(downsample(s, kDownsample));
  return d;
}

NetParams<float> criterion_training() {
  const auto t0 = Clock::now();
  const TrainingSet train_set = downsampled(generate_stack(SynthSpec{}, 8, 100));
  const TrainingSet held_out = downsampled(generate_stack(SynthSpec{}, 4, 200));

  NetConfig net;
  net.levels = 3;
  net.base_channels = 8;
  net.seed = 1;
  TrainConfig tc;
  tc.batch_size = 8;
  tc.lr = 5e-4;
  tc.max_iters = 400;
  tc.exclusion_train = 6;
  tc.template_size = 24;
  tc.source_size = 72;
  tc.seed = 3;

  TrainConfig eval_cfg = tc;
  eval_cfg.batch_size = 64;
  Rng rng(17);
  const std::vector<PairSample> pairs = make_batch(held_out, eval_cfg, rng);
  const std::vector<int> perm = random_derangement(static_cast<int>(pairs.size()), rng);

  const HeldOutStats before = evaluate_pairs(init_params(net), pairs, perm, tc.exclusion_train);
  TrainOptions opts;
  opts.on_iteration = [](const LogRow& r) {
    if (r.iteration % 100 == 0)
      std::printf("  train iter %3d  r_delta %.3f  dissim r_max %.3f\n", r.iteration, r.mean_r_delta, r.dissim_loss);
    std::fflush(stdout);
  };
  const TrainResult result = train(train_set, net, tc, opts);
  const HeldOutStats after = evaluate_pairs(result.params, pairs, perm, tc.exclusion_train);
  const double secs = seconds_since(t0);
  const bool pass = after.mean_r_delta_similar > before.mean_r_delta_similar &&
                    after.mean_r_max_dissimilar < before.mean_r_max_dissimilar && secs < 1800;
  report(4, pass,
         fmt("%d iterations, 64 held-out pairs from an unseen stack: similar r_delta %.4f -> %.4f (must rise), "
             "permuted r_max %.4f -> %.4f (must fall); %d clipped steps; %.0f s (< 1800 s)",
             tc.max_iters, before.mean_r_delta_similar, after.mean_r_delta_similar, before.mean_r_max_dissimilar,
             after.mean_r_max_dissimilar, result.clip_events, secs));
  return result.params;
}

// --- 5 and 6: benchmark --------------------------------------------------

struct Benchmark {
  SynthStack stack;
  GridSpec grid{90, 144};
  MatchConfig mc;
};

BandpassConfig tune_on_training_stack(const MatchConfig& mc, const GridSpec& grid) {
  const SynthStack st = generate_stack(SynthSpec{}, 4, 100);
  const std::vector<Point> nodes = make_grid(st.spec.width, st.spec.height, grid);
  std::vector<LabeledPair> pairs;
  for (int a = 0; a < 3; ++a) {
    auto part = make_labeled_pairs(st, a, a + 1, nodes, mc);
    pairs.insert(pairs.end(), part.begin(), part.end());
  }
  const auto sigma_grid = default_sigma_grid();
  const TuneResult r = tune_bandpass(pairs, sigma_grid);
  std::printf("  bandpass tuned on %zu training pairs: sigma_low %.1f sigma_high %.1f (%d false; raw %d)\n",
              pairs.size(), r.best.sigma_low, r.best.sigma_high, r.best_false_matches,
              count_false_matches_raw(pairs));
  return r.best;
}

std::vector<MatchRecord> run_condition(const Benchmark& b, Condition cond, const NetParams<float>* params) {
  const auto nodes = make_grid(b.stack.spec.width, b.stack.spec.height, b.grid);
  std::vector<Raster> prepared;
  for (int k = 0; k < 5; ++k) prepared.push_back(prepare_section(b.stack.sections[k], cond, b.mc, params));
  std::vector<MatchRecord> all;
  const std::pair<int, int> pairs[] = {{0, 1}, {1, 2}, {2, 3}, {0, 2}, {1, 3}, {2, 4}};
  for (auto [i, j] : pairs) {
    MatchOutput out = match_pair(prepared[i], prepared[j], nodes, b.mc, cond, make_pair_id(i, j));
    label_records(out.records, [&](Vec2 p) { return truth_displacement(b.stack, i, j, p); }, b.mc.truth_tolerance);
    all.insert(all.end(), out.records.begin(), out.records.end());
  }
  return all;
}

int false_count(const std::vector<MatchRecord>& v, const std::string& experiment) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), [&](const MatchRecord& r) {
    return r.label == Label::kFalse && experiment_of(r.pair_id) == experiment;
  }));
}

struct CurveCheck {
  std::optional<CurvePoint> best;
  bool monotone = true;
};

CurveCheck r_delta_curve(const std::vector<MatchRecord>& v) {
  const auto ts = threshold_candidates(v, Criterion::kRDelta);
  const auto curve = rejection_curve(v, Criterion::kRDelta, ts);
  CurveCheck c;
  for (std::size_t i = 1; i < curve.size(); ++i)
    c.monotone = c.monotone && curve[i].true_rejected_fraction >= curve[i - 1].true_rejected_fraction;
  c.best = best_zero_error_point(curve);
  return c;
}

void criteria_benchmark(const Benchmark& b, const NetParams<float>& params) {
  const auto t0 = Clock::now();
  Benchmark tuned = b;
  tuned.mc.bandpass = tune_on_training_stack(b.mc, b.grid);
  const auto raw = run_condition(b, Condition::kRaw, nullptr);
  const auto band = run_condition(tuned, Condition::kBandpass, nullptr);
  const auto conv = run_condition(b, Condition::kConvnet, &params);

  bool ordered = true;
  std::string detail;
  for (const std::string exp : {"adjacent", "across"}) {
    const int r = false_count(raw, exp), bp = false_count(band, exp), c = false_count(conv, exp);
    const std::size_t n = std::count_if(raw.begin(), raw.end(), [&](const MatchRecord& m) { return experiment_of(m.pair_id) == exp; });
    ordered = ordered && c <= bp && bp <= r && c < r;
    detail += fmt("%s (%zu matches): raw %d, bandpass %d, convnet %d; ", exp.c_str(), n, r, bp, c);
  }
  report(5, ordered, detail + fmt("need convnet <= bandpass <= raw and convnet < raw (%.0f s)", seconds_since(t0)));

  const CurveCheck cb = r_delta_curve(band), cc = r_delta_curve(conv), cr = r_delta_curve(raw);
  const bool monotone = cb.monotone && cc.monotone && cr.monotone;
  const bool better = cc.best && cb.best && cc.best->true_rejected_fraction < cb.best->true_rejected_fraction;
  auto show = [](const CurveCheck& c) {
    return c.best ? fmt("%.2f%% at r_delta >= %.4f", 100 * c.best->true_rejected_fraction, c.best->threshold)
                  : std::string("none");
  };
  report(6, monotone && better,
         "zero-error r_delta threshold over all six pairs rejects convnet " + show(cc) + " vs bandpass " + show(cb) +
             " (raw " + show(cr) + ") of true matches; curves monotone: " + (monotone ? "yes" : "no"));
}

// --- 7: determinism through the CLI -------------------------------------

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(NCCNET_CLI_PATH) + " --threads 1 " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism() {
  const fs::path root = testing::scratch_dir("acceptance_determinism");
  {
    std::ofstream(root / "spec.json") << R"({"width": 480, "height": 480})";
    std::ofstream(root / "net.json") << R"({"levels": 2, "base_channels": 4})";
    std::ofstream(root / "train.json")
        << R"({"batch_size": 4, "max_iters": 10, "template_size": 24, "source_size": 72, "exclusion_train": 6})";
    std::ofstream(root / "grid.json") << R"({"edge": 60, "margin": 150})";
  }
  std::vector<std::string> artifacts;
  bool ran = true;
  for (const char* run : {"run1", "run2"}) {
    const fs::path d = root / run;
    fs::create_directories(d);
    const fs::path log = d / "stdout.txt";
    ran = ran && cli("--seed 11 gen --spec " + (root / "spec.json").string() + " --sections 3 --out " + (d / "stack").string(), log) == 0;
    ran = ran && cli("--seed 12 train --data " + (d / "stack").string() + " --net " + (root / "net.json").string() +
                         " --train " + (root / "train.json").string() + " --out " + (d / "net.ckpt").string(),
                     log) == 0;
    ran = ran && cli("match --pair " + section_path(d / "stack", 0).string() + " " + section_path(d / "stack", 1).string() +
                         " --condition convnet --ckpt " + (d / "net.ckpt").string() + " --grid " +
                         (root / "grid.json").string() + " --truth " + (d / "stack").string() + " --out " +
                         (d / "records.csv").string(),
                     log) == 0;
  }
  int compared = 0, differing = 0;
  if (ran) {
    std::vector<fs::path> files{"net.ckpt", "net.ckpt.log.csv", "records.csv"};
    for (const auto& e : fs::directory_iterator(root / "run1" / "stack")) files.push_back(fs::path("stack") / e.path().filename());
    for (const fs::path& f : files) {
      ++compared;
      const std::string a = slurp(root / "run1" / f), b = slurp(root / "run2" / f);
      if (a.empty() || a != b) ++differing;
    }
  }
  report(7, ran && compared > 0 && differing == 0,
         fmt("gen, train and match twice with --threads 1: %d artifacts compared, %d differ%s", compared, differing,
             ran ? "" : " (a CLI run failed)"));
}

// --- 8: performance ------------------------------------------------------

void criterion_performance(const Benchmark& b, const NetParams<float>& params) {
  omp_set_num_threads(1);
  const Raster t = testing::random_raster(160, 160, 5), s = testing::random_raster(512, 512, 6);
  (void)ncc_fft(t, s);  // plan creation
  auto t0 = Clock::now();
  for (int k = 0; k < 3; ++k) (void)ncc_direct(t, s);
  const double direct = seconds_since(t0) / 3;
  t0 = Clock::now();
  for (int k = 0; k < 10; ++k) (void)ncc_fft(t, s);
  const double fft = seconds_since(t0) / 10;

  auto nodes = make_grid(b.stack.spec.width, b.stack.spec.height, b.grid);
  nodes.resize(std::min<std::size_t>(nodes.size(), 100));
  t0 = Clock::now();
  const Raster a = prepare_section(b.stack.sections[0], Condition::kConvnet, b.mc, &params);
  const Raster c = prepare_section(b.stack.sections[1], Condition::kConvnet, b.mc, &params);
  const MatchOutput out = match_pair(a, c, nodes, b.mc, Condition::kConvnet);
  const double match_secs = seconds_since(t0);
  report(8, direct / fft >= 5.0 && match_secs < 60 && out.records.size() == 100,
         fmt("single thread: ncc at (160,512) direct %.1f ms, fft %.2f ms, speedup %.1fx (>= 5x); "
             "%zu-node convnet match_pair incl. preprocessing %.1f s (< 60 s)",
             1e3 * direct, 1e3 * fft, direct / fft, out.records.size(), match_secs));
  omp_set_num_threads(omp_get_num_procs());
}

}  // namespace

int main() {
  try {
    criterion_oracle();
    criterion_invariance();
    criterion_gradients();
    const NetParams<float> params = criterion_training();
    Benchmark bench;
    bench.stack = generate_stack(SynthSpec{}, 6, 7);
    criteria_benchmark(bench, params);
    criterion_determinism();
    criterion_performance(bench, params);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
