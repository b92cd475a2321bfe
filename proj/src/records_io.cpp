// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iomanip>
#include <sstream>

#include "nccnet/harness.hpp"
#include "nccnet/json_io.hpp"

namespace nccnet {

std::string records_csv_header() {
  return "node_x,node_y,dx,dy,norm,r_max,r_delta,label,flagged,condition,pair_id";
}

void write_records_csv(std::span<const MatchRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open records CSV for writing", path.string());
  out << records_csv_header() << '\n';
  out << std::setprecision(9);
  for (const MatchRecord& r : records) {
    if (r.pair_id.find_first_of(",\n\"") != std::string::npos)
      throw ArgumentError("pair_id must not contain commas, quotes or newlines: " + r.pair_id);
    out << r.node.x << ',' << r.node.y << ',' << r.dx << ',' << r.dy << ',' << r.norm << ',' << r.r_max << ','
        << r.r_delta << ',' << to_string(r.label) << ',' << (r.flagged ? 1 : 0) << ',' << to_string(r.condition)
        << ',' << r.pair_id << '\n';
  }
  if (!out) throw IoError("records CSV write failed", path.string());
}

std::vector<MatchRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records CSV", path.string());
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line) || line != records_csv_header())
    throw ParseError("records CSV header mismatch in " + path.string(), 0);
  offset += line.size() + 1;
  std::vector<MatchRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 11) throw ParseError("records CSV row has " + std::to_string(f.size()) + " fields, expected 11", offset);
    try {
      MatchRecord r;
      r.node = {std::stoi(f[0]), std::stoi(f[1])};
      r.dx = std::stod(f[2]);
      r.dy = std::stod(f[3]);
      r.norm = std::stod(f[4]);
      r.r_max = std::stod(f[5]);
      r.r_delta = std::stod(f[6]);
      r.label = label_from_string(f[7]);
      r.flagged = f[8] == "1";
      r.condition = condition_from_string(f[9]);
      r.pair_id = f[10];
      records.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError("malformed records CSV row", offset);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), offset);
    }
    offset += line.size() + 1;
  }
  return records;
}

namespace {

nlohmann::json hist_json(const Histogram& h) {
  return {{"lo", h.lo}, {"hi", h.hi}, {"true", h.true_counts}, {"false", h.false_counts}};
}

void hist_rows(std::ostream& out, const GroupSummary& g, const std::string& name, const Histogram& h) {
  const int bins = static_cast<int>(h.true_counts.size());
  const double width = (h.hi - h.lo) / bins;
  for (int b = 0; b < bins; ++b)
    out << to_string(g.condition) << ',' << g.experiment << ',' << name << ',' << h.lo + b * width << ','
        << h.lo + (b + 1) * width << ',' << h.true_counts[b] << ',' << h.false_counts[b] << '\n';
}

}  // namespace

void write_summary_json(std::span<const GroupSummary> groups, int unknown_excluded, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["unknown_excluded"] = unknown_excluded;
  doc["groups"] = nlohmann::json::array();
  for (const GroupSummary& g : groups)
    doc["groups"].push_back({{"condition", to_string(g.condition)},
                             {"experiment", g.experiment},
                             {"total", g.total},
                             {"true", g.true_count},
                             {"false", g.false_count},
                             {"error_pct", g.error_pct},
                             {"histograms", {{"r_max", hist_json(g.r_max)},
                                             {"r_delta", hist_json(g.r_delta)},
                                             {"norm", hist_json(g.norm)}}}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write summary", path.string());
  out << doc.dump(2) << '\n';
}

void write_histograms_csv(std::span<const GroupSummary> groups, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write histograms", path.string());
  out << "condition,experiment,criterion,bin_lo,bin_hi,true_count,false_count\n";
  for (const GroupSummary& g : groups) {
    hist_rows(out, g, "r_max", g.r_max);
    hist_rows(out, g, "r_delta", g.r_delta);
    hist_rows(out, g, "norm", g.norm);
  }
}

void write_curve_csv(std::span<const CurvePoint> curve, const std::string& condition, const std::string& experiment,
                     Criterion criterion, std::ostream& out, bool header) {
  if (header) out << "condition,experiment,criterion,threshold,true_rejected_fraction,error_rate,kept,rejected,degenerate\n";
  for (const CurvePoint& p : curve)
    out << condition << ',' << experiment << ',' << to_string(criterion) << ',' << p.threshold << ','
        << p.true_rejected_fraction << ',' << p.error_rate << ',' << p.kept << ',' << p.rejected << ','
        << (p.degenerate ? 1 : 0) << '\n';
}

}  // namespace nccnet
