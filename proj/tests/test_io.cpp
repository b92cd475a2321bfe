// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "nccnet/error.hpp"
#include "nccnet/harness.hpp"
#include "nccnet/json_io.hpp"
#include "support.hpp"

using namespace nccnet;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<MatchRecord> sample_records() {
  std::vector<MatchRecord> v;
  for (int i = 0; i < 5; ++i) {
    MatchRecord r;
    r.node = {100 + 7 * i, 200 - i};
    r.dx = 3.0 * i - 1.5;
    r.dy = -0.1 * i;
    r.norm = std::hypot(r.dx, r.dy);
    r.r_max = 0.123456789 * i;
    r.r_delta = 1.0 / (i + 3);
    r.label = static_cast<Label>(i % 3);
    r.flagged = i == 2;
    r.condition = static_cast<Condition>(i % 3);
    r.pair_id = i < 3 ? "adjacent:0-1" : "across:1-3";
    v.push_back(r);
  }
  return v;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("records CSV round-trips") {
    const auto dir = testing::scratch_dir("io_records");
    const auto v = sample_records();
    write_records_csv(v, dir / "r.csv");
    const auto back = read_records_csv(dir / "r.csv");
    REQUIRE(back.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(back[i].node == v[i].node);
      CHECK(back[i].dx == doctest::Approx(v[i].dx).epsilon(1e-8));
      CHECK(back[i].r_max == doctest::Approx(v[i].r_max).epsilon(1e-8));
      CHECK(back[i].label == v[i].label);
      CHECK(back[i].flagged == v[i].flagged);
      CHECK(back[i].condition == v[i].condition);
      CHECK(back[i].pair_id == v[i].pair_id);
    }
    std::ifstream in(dir / "r.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "node_x,node_y,dx,dy,norm,r_max,r_delta,label,flagged,condition,pair_id");
  }

  TEST_CASE("records CSV rejects bad headers, rows and ids") {
    const auto dir = testing::scratch_dir("io_records_bad");
    {
      std::ofstream(dir / "h.csv") << "x,y\n";
      std::ofstream(dir / "short.csv") << records_csv_header() << "\n1,2,3\n";
      std::ofstream(dir / "cond.csv") << records_csv_header() << "\n1,2,0,0,0,1,0.5,true,0,magic,p\n";
      std::ofstream(dir / "num.csv") << records_csv_header() << "\n1,two,0,0,0,1,0.5,true,0,raw,p\n";
    }
    CHECK_THROWS_AS(read_records_csv(dir / "h.csv"), ParseError);
    CHECK_THROWS_AS(read_records_csv(dir / "short.csv"), ParseError);
    CHECK_THROWS_AS(read_records_csv(dir / "cond.csv"), ParseError);
    CHECK_THROWS_AS(read_records_csv(dir / "num.csv"), ParseError);
    CHECK_THROWS_AS(read_records_csv(dir / "absent.csv"), IoError);
    auto v = sample_records();
    v[0].pair_id = "a,b";
    CHECK_THROWS_AS(write_records_csv(v, dir / "x.csv"), ArgumentError);
  }

  TEST_CASE("summary JSON and histogram CSV") {
    const auto dir = testing::scratch_dir("io_summary");
    const auto groups = summarize(sample_records(), 4);
    write_summary_json(groups, 2, dir / "s.json");
    const auto doc = nlohmann::json::parse(slurp(dir / "s.json"));
    CHECK(doc["unknown_excluded"] == 2);
    REQUIRE(doc["groups"].size() == groups.size());
    for (const auto& g : doc["groups"]) {
      CHECK(g["true"].get<int>() + g["false"].get<int>() == g["total"].get<int>());
      CHECK(g["histograms"]["r_delta"]["true"].size() == 4);
    }

    write_histograms_csv(groups, dir / "h.csv");
    std::ifstream in(dir / "h.csv");
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "condition,experiment,criterion,bin_lo,bin_hi,true_count,false_count");
    while (std::getline(in, line)) ++rows;
    CHECK(rows == static_cast<int>(groups.size()) * 3 * 4);
  }

  TEST_CASE("curve CSV rows") {
    std::vector<MatchRecord> v = sample_records();
    for (auto& r : v) r.label = Label::kTrue;
    const auto ts = threshold_candidates(v, Criterion::kRDelta);
    const auto curve = rejection_curve(v, Criterion::kRDelta, ts);
    std::ostringstream out;
    write_curve_csv(curve, "raw", "adjacent", Criterion::kRDelta, out, true);
    write_curve_csv(curve, "raw", "adjacent", Criterion::kRDelta, out, false);
    std::istringstream in(out.str());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) ++n;
    CHECK(n == 1 + 2 * static_cast<int>(curve.size()));
    CHECK(out.str().rfind("condition,experiment,criterion,threshold,", 0) == 0);
  }

  TEST_CASE("strict config parsing") {
    const auto j = nlohmann::json::parse(R"({"batch_size": 4, "lr": 0.01})");
    const TrainConfig c = parse_strict<TrainConfig>(j, "train");
    CHECK(c.batch_size == 4);
    CHECK(c.lr == 0.01);
    CHECK(c.max_iters == TrainConfig{}.max_iters);
    CHECK_THROWS_AS(parse_strict<TrainConfig>(nlohmann::json::parse(R"({"batchsize": 4})"), "train"), ArgumentError);
    CHECK_THROWS_AS(parse_strict<GridSpec>(nlohmann::json::parse(R"({"edge": "wide"})"), "grid"), ArgumentError);
    CHECK_THROWS_AS(parse_strict<GridSpec>(nlohmann::json::parse("[1]"), "grid"), ArgumentError);
    const MatchConfig mc = parse_strict<MatchConfig>(nlohmann::json::parse(R"({"bandpass": {"sigma_low": 1.5}})"), "m");
    CHECK(mc.bandpass.sigma_low == 1.5);
    CHECK(mc.bandpass.sigma_high == BandpassConfig{}.sigma_high);
  }

  TEST_CASE("stacks round-trip through disk, with or without sections") {
    const auto dir = testing::scratch_dir("io_stack");
    SynthSpec s;
    s.width = s.height = 96;
    s.max_deformation = 5;
    const SynthStack st = generate_stack(s, 2, 3);
    save_stack(st, dir);
    CHECK(std::filesystem::exists(section_path(dir, 1)));
    const SynthStack back = load_stack(dir);
    CHECK(nlohmann::json(back.spec) == nlohmann::json(st.spec));
    CHECK(back.seed == 3);
    CHECK(back.sections == st.sections);
    CHECK(back.warp_x == st.warp_x);
    CHECK(back.warp_y == st.warp_y);
    const SynthStack light = load_stack(dir, false);
    CHECK(light.sections.empty());
    CHECK(light.warp_x.size() == 2);
    CHECK_THROWS_AS(load_stack(dir / "nope"), IoError);
  }
}
