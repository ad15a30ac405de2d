// Command-line harness around the simulator: run single experiments, sweep
// one config key, and summarize metrics files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "byzsim/byzsim.hpp"

namespace fs = std::filesystem;

namespace {

byzsim::ExperimentConfig load_config(const std::string& config_path,
                                     const std::string& preset_name) {
  if (!preset_name.empty()) return byzsim::preset(preset_name);
  return byzsim::parse_config(byzsim::detail::read_file(config_path));
}

std::vector<byzsim::json> parse_values(const std::string& csv) {
  std::vector<byzsim::json> values;
  std::string cur;
  std::istringstream in(csv);
  while (std::getline(in, cur, ',')) {
    if (cur.empty()) continue;
    try {
      values.push_back(byzsim::json::parse(cur));
    } catch (const byzsim::json::exception&) {
      values.push_back(byzsim::json(cur));  // bare string value
    }
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"byzsim - Byzantine-robust distributed SGD simulator"};
  app.require_subcommand(1);

  // run
  std::string run_config, run_preset, run_out;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false, dump_config = false;
  auto* run = app.add_subcommand("run", "execute one experiment");
  auto* cfg_opt = run->add_option("--config", run_config, "config JSON path");
  run->add_option("--preset", run_preset,
                  "built-in recipe (see `byzsim presets`)");
  run->add_option("--seed", run_seed, "override the config seed")
      ->each([&](const std::string&) { run_seed_set = true; });
  run->add_option("--out", run_out, "output directory (default: config output)");
  run->add_flag("--dump-config", dump_config,
                "print the resolved config instead of running");

  // sweep
  std::string sweep_config, sweep_preset, sweep_axis, sweep_values, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "run one config across axis values");
  sweep->add_option("--config", sweep_config, "config JSON path");
  sweep->add_option("--preset", sweep_preset, "built-in recipe as template");
  sweep->add_option("--axis", sweep_axis, "dotted config key, e.g. aggregator.tau")
      ->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required();
  sweep->add_option("--out", sweep_out, "output directory");

  // report
  std::vector<std::string> report_files;
  std::string report_json, report_csv;
  auto* report = app.add_subcommand("report", "summarize metrics files");
  report->add_option("files", report_files, "metrics.csv paths")->required();
  report->add_option("--json", report_json, "write the summary as JSON here");
  report->add_option("--csv", report_csv, "write a plot-ready long CSV here");

  // presets
  auto* presets = app.add_subcommand("presets", "list built-in recipes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (run_config.empty() == run_preset.empty())
        throw byzsim::UsageError("run: give exactly one of --config/--preset");
      byzsim::ExperimentConfig cfg = load_config(run_config, run_preset);
      if (run_seed_set) cfg.seed = run_seed;
      if (!run_out.empty()) cfg.output = run_out;
      if (dump_config) {
        std::cout << byzsim::to_json(byzsim::resolve(cfg).config).dump(2)
                  << "\n";
        return 0;
      }
      byzsim::RunResult result = byzsim::run_experiment(cfg);
      for (const std::string& w : result.warnings)
        std::cerr << "warning: " << w << "\n";
      std::cout << "metrics: " << result.metrics_csv.string() << "\n";
      std::cout << "sidecar: " << result.sidecar.string() << "\n";
      if (result.diverged)
        std::cout << "diverged at round " << result.divergence_round << "\n";
      return 0;
    }
    if (*sweep) {
      if (sweep_config.empty() == sweep_preset.empty())
        throw byzsim::UsageError("sweep: give exactly one of --config/--preset");
      byzsim::ExperimentConfig cfg = load_config(sweep_config, sweep_preset);
      const fs::path out =
          sweep_out.empty() ? fs::path(cfg.output) : fs::path(sweep_out);
      byzsim::SweepResult result =
          byzsim::run_sweep(cfg, sweep_axis, parse_values(sweep_values), out);
      std::cout << "index: " << result.index_path.string() << "\n";
      for (const auto& [value, path] : result.runs)
        std::cout << value.dump() << " -> " << path.string() << "\n";
      return 0;
    }
    if (*report) {
      std::vector<fs::path> files(report_files.begin(), report_files.end());
      byzsim::Report rep = byzsim::make_report(files);
      std::cout << rep.text;
      if (!report_json.empty()) {
        byzsim::detail::write_atomic(report_json, rep.as_json.dump(2) + "\n");
        if (report_csv.empty())
          report_csv =
              fs::path(report_json).replace_extension().string() + "_long.csv";
      }
      if (!report_csv.empty())
        byzsim::detail::write_atomic(report_csv, rep.long_csv);
      return 0;
    }
    if (*presets) {
      for (const std::string& name : byzsim::preset_names())
        std::cout << name << "\n";
      return 0;
    }
  } catch (const byzsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const byzsim::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
