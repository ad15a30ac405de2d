#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "byzsim/config.hpp"
#include "byzsim/metrics.hpp"
#include "byzsim/optimizer.hpp"
#include "byzsim/version.hpp"

namespace byzsim {

namespace fs = std::filesystem;

namespace detail {

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Write-then-rename so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".")
                                                    : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

struct RunResult {
  fs::path metrics_csv;
  fs::path sidecar;
  std::string config_hash;
  bool diverged = false;
  int divergence_round = 0;
  MetricRecord final_record;
  double final_accuracy = -1.0;  // -1 when the problem has no labels
  std::vector<std::string> warnings;
};

inline std::string config_hash(const ExperimentConfig& resolved) {
  return detail::fnv1a_hex(to_json(resolved).dump());
}

// Execute one experiment: T rounds, a metrics CSV (header + one row per
// cadence tick) and a sidecar run.json holding the fully resolved config,
// library version, timing, and the divergence outcome. Exploding models are
// a recorded outcome, not an error.
inline RunResult run_experiment(const ExperimentConfig& input,
                                const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  ResolvedExperiment exp = resolve(input);
  RunResult result;
  result.warnings = exp.warnings;
  result.config_hash = config_hash(exp.config);

  if (exp.config.problem.export_dataset.has_value() &&
      exp.problem->kind() == ProblemKind::ImbalancedSoftmax) {
    const auto* softmax = dynamic_cast<const detail::ImbalancedSoftmaxProblem*>(
        &underlying_problem(*exp.problem));
    if (softmax != nullptr) {
      std::ostringstream csv;
      const int d = exp.config.problem.softmax.feature_dim;
      for (int j = 0; j < d; ++j) csv << "x" << j << ",";
      csv << "label\n";
      char buf[32];
      for (std::size_t i = 0; i < softmax->features().size(); ++i) {
        for (double v : softmax->features()[i]) {
          std::snprintf(buf, sizeof(buf), "%.17g,", v);
          csv << buf;
        }
        csv << softmax->labels()[i] << "\n";
      }
      detail::write_atomic(fs::path(*exp.config.problem.export_dataset),
                           csv.str());
    }
  }

  Simulator sim(*exp.problem, exp.aggregator, exp.attack, exp.optimizer,
                exp.config.workers, exp.config.seed);

  std::ostringstream csv;
  csv << metric_csv_header() << "\n";
  MetricRecord last{};
  for (int t = 1; t <= exp.config.rounds; ++t) {
    MetricRecord rec = sim.step();
    const bool finite = all_finite(sim.state().x) && std::isfinite(rec.loss) &&
                        std::isfinite(rec.grad_norm_sq) &&
                        std::isfinite(rec.aggregation_error);
    if (!finite) {
      result.diverged = true;
      result.divergence_round = t;
      break;
    }
    last = rec;
    if (t % exp.config.record_every == 0 || t == exp.config.rounds)
      csv << metric_csv_row(rec) << "\n";
  }
  result.final_record = last;
  if (exp.problem->has_labels() && !result.diverged)
    result.final_accuracy = exp.problem->accuracy(sim.state().x);

  fs::create_directories(out_dir);
  result.metrics_csv = out_dir / "metrics.csv";
  result.sidecar = out_dir / "run.json";
  detail::write_atomic(result.metrics_csv, csv.str());

  const auto elapsed = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  json sidecar{{"version", kVersion},
               {"config", to_json(exp.config)},
               {"config-hash", result.config_hash},
               {"diverged", result.diverged},
               {"divergence-round",
                result.diverged ? json(result.divergence_round) : json(nullptr)},
               {"rounds-completed",
                result.diverged ? result.divergence_round - 1
                                : exp.config.rounds},
               {"final-accuracy", result.final_accuracy >= 0.0
                                      ? json(result.final_accuracy)
                                      : json(nullptr)},
               {"wall-clock-ms", elapsed},
               {"warnings", result.warnings}};
  detail::write_atomic(result.sidecar, sidecar.dump(2) + "\n");
  return result;
}

inline RunResult run_experiment(const ExperimentConfig& input) {
  return run_experiment(input, fs::path(input.output));
}

// ---------------------------------------------------------------------------
// Sweep: one run per axis value, patched into the template via a JSON pointer
// derived from a dotted key ("aggregator.tau").

struct SweepResult {
  fs::path index_path;
  std::vector<std::pair<json, fs::path>> runs;
};

inline SweepResult run_sweep(const ExperimentConfig& tmpl,
                             const std::string& axis_key,
                             const std::vector<json>& values,
                             const fs::path& out_dir) {
  if (values.empty()) throw UsageError("sweep: empty value list");
  json base = to_json(tmpl);
  std::string pointer = "/" + axis_key;
  for (auto& ch : pointer)
    if (ch == '.') ch = '/';
  const json::json_pointer ptr(pointer);
  {
    json probe = base;
    try {
      probe.at(ptr);
    } catch (const json::exception&) {
      throw ConfigError("sweep axis '" + axis_key + "' not found in config");
    }
  }

  SweepResult result;
  json index{{"axis", axis_key}, {"runs", json::array()}};
  for (const json& v : values) {
    json patched = base;
    patched[ptr] = v;
    ExperimentConfig cfg = config_from_json(patched);
    std::string label = v.is_string() ? v.get<std::string>() : v.dump();
    for (auto& ch : label)
      if (ch == '/' || ch == ' ') ch = '_';
    const fs::path run_dir = out_dir / (axis_key + "=" + label);
    cfg.output = run_dir.string();
    RunResult run = run_experiment(cfg, run_dir);
    index["runs"].push_back(
        {{"value", v}, {"path", run.metrics_csv.string()}});
    result.runs.emplace_back(v, run.metrics_csv);
  }
  result.index_path = out_dir / "sweep-index.json";
  detail::write_atomic(result.index_path, index.dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// Report: summarize one or more metrics files (final loss / gradient norm,
// minimum suboptimality, divergence flag), sorted by config hash.

struct ReportRow {
  std::string file;
  std::string config_hash;
  bool diverged = false;
  int divergence_round = 0;
  int rows = 0;
  double final_loss = 0.0;
  double final_grad_norm_sq = 0.0;
  double min_suboptimality = 0.0;
  double final_accuracy = -1.0;
  std::string error;  // non-empty when the file could not be read
};

namespace detail {

inline std::vector<std::vector<double>> parse_metrics_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  bool header = true;
  while (std::getline(lines, line)) {
    if (header) {
      if (line.rfind("round,", 0) != 0)
        throw UsageError(path.string() + ": not a metrics CSV");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline ReportRow report_one(const fs::path& metrics_csv) {
  ReportRow row;
  row.file = metrics_csv.string();
  try {
    const auto rows = detail::parse_metrics_csv(metrics_csv);
    row.rows = static_cast<int>(rows.size());
    if (!rows.empty()) {
      const auto& last = rows.back();
      row.final_loss = last[1];
      row.final_grad_norm_sq = last[2];
      double best = last[4];
      for (const auto& r : rows) best = std::min(best, r[4]);
      row.min_suboptimality = best;
    }
    const fs::path sidecar = metrics_csv.parent_path() / "run.json";
    if (fs::exists(sidecar)) {
      const json meta = json::parse(detail::read_file(sidecar));
      row.config_hash = meta.value("config-hash", std::string());
      row.diverged = meta.value("diverged", false);
      if (row.diverged && meta.contains("divergence-round") &&
          !meta.at("divergence-round").is_null())
        row.divergence_round = meta.at("divergence-round").get<int>();
      if (meta.contains("final-accuracy") && !meta.at("final-accuracy").is_null())
        row.final_accuracy = meta.at("final-accuracy").get<double>();
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

struct Report {
  std::vector<ReportRow> rows;
  std::string text;      // human-readable table
  json as_json;
  std::string long_csv;  // plot-ready long format
};

inline Report make_report(const std::vector<fs::path>& metrics_files) {
  if (metrics_files.empty()) throw UsageError("report: no metrics files given");
  Report report;
  for (const fs::path& p : metrics_files) report.rows.push_back(report_one(p));
  std::sort(report.rows.begin(), report.rows.end(),
            [](const ReportRow& a, const ReportRow& b) {
              return a.config_hash < b.config_hash;
            });

  std::ostringstream text;
  text << "hash             rows   final_loss     final_grad_sq  min_subopt "
          "    diverged file\n";
  report.as_json = json::array();
  std::ostringstream long_csv;
  long_csv << "hash,round,metric,value\n";
  static const char* kMetricNames[] = {"loss", "grad_norm_sq",
                                       "aggregation_error", "suboptimality"};
  for (const ReportRow& row : report.rows) {
    if (!row.error.empty()) {
      text << "-- error: " << row.error << " (" << row.file << ")\n";
      report.as_json.push_back({{"file", row.file}, {"error", row.error}});
      continue;
    }
    char line[512];
    std::snprintf(line, sizeof(line),
                  "%-16s %-6d %-14.6g %-14.6g %-14.6g %-8s %s\n",
                  row.config_hash.c_str(), row.rows, row.final_loss,
                  row.final_grad_norm_sq, row.min_suboptimality,
                  row.diverged
                      ? ("r" + std::to_string(row.divergence_round)).c_str()
                      : "no",
                  row.file.c_str());
    text << line;
    json entry{{"file", row.file},
               {"config-hash", row.config_hash},
               {"rows", row.rows},
               {"final-loss", row.final_loss},
               {"final-grad-norm-sq", row.final_grad_norm_sq},
               {"min-suboptimality", row.min_suboptimality},
               {"diverged", row.diverged}};
    if (row.diverged) entry["divergence-round"] = row.divergence_round;
    if (row.final_accuracy >= 0.0) entry["final-accuracy"] = row.final_accuracy;
    report.as_json.push_back(entry);

    try {
      for (const auto& r : detail::parse_metrics_csv(row.file)) {
        for (int m = 0; m < 4; ++m) {
          char cell[256];
          std::snprintf(cell, sizeof(cell), "%s,%d,%s,%.17g\n",
                        row.config_hash.c_str(), static_cast<int>(r[0]),
                        kMetricNames[m], r[m + 1]);
          long_csv << cell;
        }
      }
    } catch (const std::exception&) {
      // already surfaced above
    }
  }
  report.text = text.str();
  report.long_csv = long_csv.str();
  return report;
}

}  // namespace byzsim
