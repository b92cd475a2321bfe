// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// nccnet: generate synthetic stacks, train the filter network, match section
// pairs and evaluate match records.

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "nccnet/convnet.hpp"
#include "nccnet/harness.hpp"
#include "nccnet/json_io.hpp"
#include "nccnet/selfcheck.hpp"
#include "nccnet/synth.hpp"
#include "nccnet/trainer.hpp"

#ifndef NCCNET_BUILD_ID
#define NCCNET_BUILD_ID "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nccnet;

namespace {

// Bad flags or configs: reported before any work starts, exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read JSON file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string config_path;
};

// Experiment config file: optional sections synth, grid, match, net, train.
json load_experiment_config(const Globals& g) {
  if (g.config_path.empty()) return json::object();
  json doc = read_json_file(g.config_path);
  if (!doc.is_object()) throw UsageError(g.config_path + ": expected a JSON object");
  for (const auto& [key, value] : doc.items())
    if (key != "synth" && key != "grid" && key != "match" && key != "net" && key != "train")
      throw UsageError(g.config_path + ": unknown section '" + key + "'");
  return doc;
}

// A section from the experiment config, overridden by a dedicated flag file.
template <typename T>
T resolve(const json& experiment, const char* section, const std::string& flag_file) {
  json j = experiment.contains(section) ? experiment[section] : json::object();
  if (!flag_file.empty()) j = read_json_file(flag_file);
  try {
    T value = parse_strict<T>(j, section);
    validate(value);
    return value;
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
}

fs::path sidecar_for(const fs::path& out) {
  fs::path p = out.lexically_normal();
  if (!p.has_filename()) p = p.parent_path();
  return p.string() + ".run.json";
}

class Run {
 public:
  Run(std::string subcommand, json config, std::uint64_t seed, fs::path manifest)
      : manifest_(std::move(manifest)), start_(std::chrono::steady_clock::now()) {
    doc_ = {{"subcommand", std::move(subcommand)}, {"build_id", NCCNET_BUILD_ID}, {"seed", seed},
            {"threads", omp_get_max_threads()}, {"config", std::move(config)}};
    std::cout << doc_["config"].dump(2) << std::endl;
  }

  // Written once, after the primary artifacts.
  void finish() {
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start_;
    doc_["wall_time_s"] = wall.count();
    std::ofstream out(manifest_, std::ios::trunc);
    if (!out) throw IoError("cannot write run manifest", manifest_.string());
    out << doc_.dump(2) << '\n';
  }

 private:
  json doc_;
  fs::path manifest_;
  std::chrono::steady_clock::time_point start_;
};

void require_writable_parent(const fs::path& file) {
  const fs::path parent = file.parent_path().empty() ? fs::path(".") : file.parent_path();
  if (!fs::is_directory(parent)) throw IoError("output directory does not exist", parent.string());
}

// --- gen ---------------------------------------------------------------

struct GenArgs {
  std::string spec, out;
  int sections = 6;
};

int cmd_gen(const Globals& g, const GenArgs& a) {
  const json experiment = load_experiment_config(g);
  const SynthSpec spec = resolve<SynthSpec>(experiment, "synth", a.spec);
  if (a.sections < 1) throw UsageError("--sections must be >= 1");
  const std::uint64_t seed = g.seed.value_or(1);
  Run run("gen", {{"synth", spec}, {"sections", a.sections}, {"seed", seed}}, seed, sidecar_for(a.out));
  const SynthStack stack = generate_stack(spec, a.sections, seed);
  save_stack(stack, a.out);
  run.finish();
  return 0;
}

// --- train -------------------------------------------------------------

struct TrainArgs {
  std::string data, net, train, out, log;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const json experiment = load_experiment_config(g);
  NetConfig net = resolve<NetConfig>(experiment, "net", a.net);
  TrainConfig tc = resolve<TrainConfig>(experiment, "train", a.train);
  const MatchConfig mc = resolve<MatchConfig>(experiment, "match", "");
  if (g.seed) {
    net.seed = *g.seed;
    tc.seed = *g.seed;
  }
  const fs::path ckpt = a.out;
  const fs::path log = a.log.empty() ? fs::path(a.out + ".log.csv") : fs::path(a.log);
  require_writable_parent(ckpt);
  require_writable_parent(log);

  Run run("train", {{"net", net}, {"train", tc}, {"downsample", mc.downsample}, {"data", a.data}}, tc.seed,
          sidecar_for(ckpt));
  const SynthStack stack = load_stack(a.data);
  TrainingSet data;
  for (const Raster& s : stack.sections) data.sections.push_back(downsample(s, mc.downsample));

  TrainOptions opts;
  opts.checkpoint_path = ckpt;
  opts.on_iteration = [&](const LogRow& r) {
    if (r.iteration % 50 == 0 || r.iteration + 1 == tc.max_iters)
      std::printf("iter %5d gap %.4f dissim %.4f r_max %.4f r_delta %.4f |g| %.3g\n", r.iteration, r.gap_loss,
                  r.dissim_loss, r.mean_r_max, r.mean_r_delta, r.grad_norm);
    std::fflush(stdout);
  };
  const TrainResult result = train(data, net, tc, opts);
  save_checkpoint(result.params, ckpt);
  write_training_log(result.log, log);
  std::printf("gradient clipping triggered on %d steps\n", result.clip_events);
  run.finish();
  return 0;
}

// --- match -------------------------------------------------------------

struct MatchArgs {
  std::vector<std::string> pair;
  std::string condition, grid, match, ckpt, out, truth, pair_id;
  double flag_radius = 0.0;
};

std::optional<int> section_index(const fs::path& p) {
  const std::string stem = p.stem().string();
  const std::string prefix = "section_";
  if (stem.rfind(prefix, 0) != 0) return std::nullopt;
  const auto ids = sections_of("x:" + stem.substr(prefix.size()) + "-0");
  if (!ids) return std::nullopt;
  return ids->first;
}

int cmd_match(const Globals& g, const MatchArgs& a) {
  const json experiment = load_experiment_config(g);
  const GridSpec grid = [&] {
    json j = experiment.contains("grid") ? experiment["grid"] : json::object();
    if (!a.grid.empty()) j = read_json_file(a.grid);
    try {
      const GridSpec gs = parse_strict<GridSpec>(j, "grid");
      if (!(gs.edge > 0) || gs.margin < 0) throw UsageError("grid: edge must be > 0 and margin >= 0");
      return gs;
    } catch (const ArgumentError& e) {
      throw UsageError(e.what());
    }
  }();
  const MatchConfig mc = resolve<MatchConfig>(experiment, "match", a.match);
  Condition cond;
  try {
    cond = condition_from_string(a.condition);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  if (cond == Condition::kConvnet && a.ckpt.empty()) throw UsageError("--condition convnet requires --ckpt");
  const double radius = a.flag_radius > 0 ? a.flag_radius : 1.5 * grid.edge;

  std::string pair_id = a.pair_id;
  if (pair_id.empty()) {
    const auto ia = section_index(a.pair[0]), ib = section_index(a.pair[1]);
    pair_id = ia && ib ? make_pair_id(*ia, *ib)
                       : "pair:" + fs::path(a.pair[0]).stem().string() + "-" + fs::path(a.pair[1]).stem().string();
  }
  if (pair_id.find_first_of(",\n\"") != std::string::npos) throw UsageError("pair id must not contain , or quotes");
  require_writable_parent(a.out);

  json echo = {{"grid", grid},     {"match", mc},          {"condition", to_string(cond)},
               {"pair", a.pair},   {"pair_id", pair_id},   {"flag_radius", radius}};
  if (!a.ckpt.empty()) echo["ckpt"] = a.ckpt;
  if (!a.truth.empty()) echo["truth"] = a.truth;
  Run run("match", echo, 0, sidecar_for(a.out));

  std::optional<NetParams<float>> params;
  if (cond == Condition::kConvnet) params = load_checkpoint(a.ckpt);
  const Raster ta = load_f32(a.pair[0]);
  const Raster sb = load_f32(a.pair[1]);
  const std::vector<Point> nodes = make_grid(ta.width(), ta.height(), grid);
  const Raster tp = prepare_section(ta, cond, mc, params ? &*params : nullptr);
  const Raster sp = prepare_section(sb, cond, mc, params ? &*params : nullptr);
  MatchOutput out = match_pair(tp, sp, nodes, mc, cond, pair_id);

  const NeighborFlags flags = flag_neighbor_outliers(out.records, radius);
  int flagged = 0, insufficient = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    out.records[i].flagged = flags.flagged[i];
    flagged += flags.flagged[i];
    insufficient += flags.insufficient[i];
  }
  if (!a.truth.empty()) {
    const auto ids = sections_of(pair_id);
    if (!ids) throw UsageError("--truth needs a pair id of the form exp:a-b");
    const SynthStack truth = load_stack(a.truth, false);
    label_records(out.records, [&](Vec2 p) { return truth_displacement(truth, ids->first, ids->second, p); },
                  mc.truth_tolerance);
  }
  write_records_csv(out.records, a.out);
  std::printf("%zu records, %zu skipped, %d flagged by neighbors, %d with too few neighbors\n", out.records.size(),
              out.skipped.size(), flagged, insufficient);
  for (const SkippedNode& s : out.skipped) std::printf("skipped node (%d,%d): %s\n", s.node.x, s.node.y, s.reason.c_str());
  run.finish();
  return 0;
}

// --- eval --------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> records;
  std::string truth, out, match;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const json experiment = load_experiment_config(g);
  const MatchConfig mc = resolve<MatchConfig>(experiment, "match", a.match);
  json echo = {{"records", a.records}, {"out", a.out}, {"truth_tolerance", mc.truth_tolerance}};
  if (!a.truth.empty()) echo["truth"] = a.truth;
  Run run("eval", echo, 0, sidecar_for(a.out));

  std::vector<MatchRecord> records;
  for (const std::string& path : a.records) {
    std::vector<MatchRecord> part = read_records_csv(path);
    records.insert(records.end(), part.begin(), part.end());
  }
  if (!a.truth.empty()) {
    const SynthStack truth = load_stack(a.truth, false);
    const int n = static_cast<int>(truth.warp_x.size());
    for (MatchRecord& r : records) {
      const auto ids = sections_of(r.pair_id);
      if (!ids || ids->first >= n || ids->second >= n) {
        r.label = Label::kUnknown;
        r.truth.reset();
        continue;
      }
      std::vector<MatchRecord> one{r};
      label_records(one, [&](Vec2 p) { return truth_displacement(truth, ids->first, ids->second, p); },
                    mc.truth_tolerance);
      r = one[0];
    }
  }
  std::vector<MatchRecord> labeled;
  for (const MatchRecord& r : records)
    if (r.label != Label::kUnknown) labeled.push_back(r);
  const int unknown = static_cast<int>(records.size() - labeled.size());

  fs::create_directories(a.out);
  const std::vector<GroupSummary> groups = summarize(labeled);
  write_summary_json(groups, unknown, fs::path(a.out) / "summary.json");
  write_histograms_csv(groups, fs::path(a.out) / "histograms.csv");

  std::ofstream curves(fs::path(a.out) / "rejection_curves.csv", std::ios::trunc);
  if (!curves) throw IoError("cannot write rejection curves", a.out);
  bool header = true;
  for (const GroupSummary& gs : groups) {
    std::vector<MatchRecord> members;
    for (const MatchRecord& r : labeled)
      if (r.condition == gs.condition && experiment_of(r.pair_id) == gs.experiment) members.push_back(r);
    for (Criterion c : {Criterion::kNorm, Criterion::kRMax, Criterion::kRDelta}) {
      const std::vector<double> ts = threshold_candidates(members, c);
      const std::vector<CurvePoint> curve = rejection_curve(members, c, ts);
      write_curve_csv(curve, to_string(gs.condition), gs.experiment, c, curves, header);
      header = false;
      if (c == Criterion::kRDelta) {
        const auto best = best_zero_error_point(curve);
        std::printf("%-9s %-9s total %5d false %4d (%.2f%%)", to_string(gs.condition).c_str(), gs.experiment.c_str(),
                    gs.total, gs.false_count, gs.error_pct);
        if (best)
          std::printf("  zero-error r_delta >= %.4f rejects %.2f%% of true matches\n", best->threshold,
                      100.0 * best->true_rejected_fraction);
        else
          std::printf("  no zero-error r_delta threshold\n");
      }
    }
  }
  std::printf("%d records without ground truth excluded\n", unknown);
  run.finish();
  return 0;
}

// --- selfcheck ---------------------------------------------------------

int cmd_selfcheck(double tolerance_scale) {
  bool ok = true;
  for (const CheckResult& c : run_selfcheck(tolerance_scale)) {
    std::printf("%s  %-58s max_error %.3e  tolerance %.1e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.max_error,
                c.tolerance);
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NCC template matching with a learned preprocessing filter"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--threads", g.threads, "Worker threads (0: all available)")->check(CLI::NonNegativeNumber);
  app.add_option("--config", g.config_path, "Experiment JSON (sections synth, grid, match, net, train)");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic section stack");
  gen_cmd->add_option("--spec", gen.spec, "Synthetic stack spec JSON");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--sections", gen.sections, "Number of sections");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the filter network");
  train_cmd->add_option("--data", tr.data, "Stack directory")->required();
  train_cmd->add_option("--net", tr.net, "Network config JSON");
  train_cmd->add_option("--train", tr.train, "Training config JSON");
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", tr.log, "Training log CSV (default: <out>.log.csv)");

  MatchArgs ma;
  auto* match_cmd = app.add_subcommand("match", "Match a section pair over a triangular grid");
  match_cmd->add_option("--pair", ma.pair, "Template section and source section (.f32)")->required()->expected(2);
  match_cmd->add_option("--condition", ma.condition, "raw | bandpass | convnet")->required();
  match_cmd->add_option("--grid", ma.grid, "Grid JSON");
  match_cmd->add_option("--match", ma.match, "Match config JSON");
  match_cmd->add_option("--ckpt", ma.ckpt, "Network checkpoint (convnet condition)");
  match_cmd->add_option("--out", ma.out, "Records CSV")->required();
  match_cmd->add_option("--truth", ma.truth, "Stack directory with warp fields, for labels");
  match_cmd->add_option("--pair-id", ma.pair_id, "Pair id (default: derived from file names)");
  match_cmd->add_option("--flag-radius", ma.flag_radius, "Neighbor radius (default: 1.5 x grid edge)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Summarize match records");
  eval_cmd->add_option("--records", ev.records, "Records CSV files")->required();
  eval_cmd->add_option("--truth", ev.truth, "Stack directory with warp fields");
  eval_cmd->add_option("--match", ev.match, "Match config JSON (truth tolerance)");
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();

  double tolerance_scale = 1.0;
  auto* self_cmd = app.add_subcommand("selfcheck", "Run the oracle checks");
  self_cmd->add_option("--tolerance-scale", tolerance_scale)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*gen_cmd) return cmd_gen(g, gen);
    if (*train_cmd) return cmd_train(g, tr);
    if (*match_cmd) return cmd_match(g, ma);
    if (*eval_cmd) return cmd_eval(g, ev);
    if (*self_cmd) return cmd_selfcheck(tolerance_scale);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
