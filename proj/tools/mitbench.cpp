// Copyright 2026 mitbench contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mitbench/calibration.hpp"
#include "mitbench/device_model.hpp"
#include "mitbench/experiment.hpp"
#include "mitbench/harness.hpp"
#include "mitbench/qubit_sim.hpp"

namespace {

namespace fs = std::filesystem;
using mitbench::BenchConfig;
using mitbench::DeviceModel;

nlohmann::json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

BenchConfig load_config(const std::string& path) {
  if (path.empty()) return BenchConfig{};
  return parse_file(path).get<BenchConfig>();
}

// Accepts either a bare device-model object or a calibration document that
// carries one under "model".
DeviceModel load_model(const std::string& path) {
  nlohmann::json doc = parse_file(path);
  if (doc.is_object() && doc.contains("model")) doc = doc.at("model");
  return doc.get<DeviceModel>();
}

fs::path write_json(const fs::path& dir, const std::string& name,
                    const nlohmann::json& doc) {
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
  return path;
}

std::vector<mitbench::ExperimentSpec> suite_from_config(const BenchConfig& config,
                                                        const DeviceModel& model) {
  return mitbench::build_program_suite(
      config.suite.m_cycles, config.suite.stretch_factors, config.suite.tau0,
      model, config.suite.shots, mitbench::mix_seed(config.seed, 2));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mitigability benchmark for a pulse-stretched driven qubit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "mitbench 1.0.0");

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<std::string> formats;
  std::string model_path;
  std::string input_path;

  app.add_option("--config", config_path, "Config JSON file; defaults apply when omitted")
      ->type_name("PATH");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "Base seed override")->type_name("N");
  CLI::Option* out_opt =
      app.add_option("--out", out_dir, "Output directory override")->type_name("DIR");
  CLI::Option* format_opt =
      app.add_option("--format", formats, "Report formats (repeatable)")
          ->type_name("json|csv")
          ->check(CLI::IsMember({"json", "csv"}));

  CLI::App* cmd_calibrate = app.add_subcommand(
      "calibrate", "Fit a device model from simulated calibration runs");
  CLI::App* cmd_suite = app.add_subcommand(
      "suite", "Emit the schedule file for the configured program grid");
  cmd_suite->add_option("--model", model_path,
                        "Device model JSON for amplitudes (default: config device)")
      ->type_name("PATH");
  CLI::App* cmd_run = app.add_subcommand(
      "run", "Simulate the program suite and emit a results file");
  cmd_run->add_option("--model", model_path,
                      "Device model JSON for amplitudes (default: config device)")
      ->type_name("PATH");
  CLI::App* cmd_ingest = app.add_subcommand(
      "ingest", "Validate an external results file against the configured suite");
  cmd_ingest->add_option("results", input_path, "Results JSON file")
      ->required()
      ->type_name("PATH");
  cmd_ingest
      ->add_option("--model", model_path,
                   "Device model JSON for amplitudes (default: config device)")
      ->type_name("PATH");
  CLI::App* cmd_bench = app.add_subcommand(
      "bench", "End-to-end: calibrate, measure, extrapolate, report");
  cmd_bench
      ->add_option("results", input_path,
                   "Replay this results file instead of simulating")
      ->type_name("PATH");
  CLI::App* cmd_report = app.add_subcommand(
      "report", "Render an existing report JSON into the requested formats");
  cmd_report->add_option("report", input_path, "Report JSON file")
      ->required()
      ->type_name("PATH");

  CLI11_PARSE(app, argc, argv);

  try {
    BenchConfig config = load_config(config_path);
    if (seed_opt->count() > 0) config.seed = seed;
    if (out_opt->count() > 0) config.output.dir = out_dir;
    if (format_opt->count() > 0) config.output.formats = formats;
    config.validate();
    const fs::path out = config.output.dir;

    if (cmd_calibrate->parsed()) {
      const mitbench::CalibrationResult cal = mitbench::calibrate_device(
          config.device, config.calibration, mitbench::mix_seed(config.seed, 1));
      std::cout << write_json(out, "calibration.json", cal).string() << '\n';
      return 0;
    }

    const DeviceModel model =
        model_path.empty() ? config.device : load_model(model_path);

    if (cmd_suite->parsed()) {
      const auto suite = suite_from_config(config, model);
      std::cout << write_json(out, "schedules.json",
                              mitbench::export_schedules(suite, model))
                       .string()
                << '\n';
      return 0;
    }

    if (cmd_run->parsed()) {
      const auto suite = suite_from_config(config, model);
      std::vector<mitbench::MeasurementRecord> records;
      records.reserve(suite.size());
      for (const auto& spec : suite)
        records.push_back(mitbench::run_experiment(config.device, spec));
      std::cout << write_json(out, "results.json",
                              mitbench::export_results(records))
                       .string()
                << '\n';
      return 0;
    }

    if (cmd_ingest->parsed()) {
      const auto suite = suite_from_config(config, model);
      const mitbench::IngestOutcome outcome =
          mitbench::ingest_results(parse_file(input_path), suite, model);
      for (const std::string& d : outcome.diagnostics)
        std::cout << "diagnostic: " << d << '\n';
      std::cout << "matched " << outcome.records.size() << " of " << suite.size()
                << " programs\n";
      std::cout << write_json(out, "ingested.json",
                              mitbench::export_results(outcome.records))
                       .string()
                << '\n';
      return 0;
    }

    if (cmd_bench->parsed()) {
      const mitbench::MitigabilityReport report =
          input_path.empty()
              ? mitbench::run_benchmark(config)
              : mitbench::run_benchmark(config, parse_file(input_path));
      for (const fs::path& path :
           mitbench::render_report(report, out, config.output.formats))
        std::cout << path.string() << '\n';
      std::vector<mitbench::MeasurementRecord> records;
      for (const mitbench::MBlock& block : report.blocks)
        records.insert(records.end(), block.records.begin(), block.records.end());
      std::cout << write_json(out, "results.json",
                              mitbench::export_results(records))
                       .string()
                << '\n';
      return 0;
    }

    if (cmd_report->parsed()) {
      const auto report =
          parse_file(input_path).get<mitbench::MitigabilityReport>();
      for (const fs::path& path :
           mitbench::render_report(report, out, config.output.formats))
        std::cout << path.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
