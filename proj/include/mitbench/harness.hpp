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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mitbench/calibration.hpp"
#include "mitbench/device_model.hpp"
#include "mitbench/experiment.hpp"
#include "mitbench/extrapolation.hpp"

namespace mitbench {

// Program grid: every cycle count is paired with every stretch factor.
struct SuiteConfig {
  std::vector<int> m_cycles{5, 20, 40, 80, 160};
  std::vector<double> stretch_factors{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5};
  double tau0 = 10.0;  // base period, dt
  int shots = 1024;
};

struct ExtrapolationConfig {
  bool weighted = true;          // 1/variance weights in the linear fit
  double chi2_threshold = 3.0;   // reduced-chi2 cut flagging the non-linear regime
  bool high_order = true;        // also report the full-order Richardson estimate
  std::string model_source = "calibrated";  // or "ground-truth" (ablation)
};

struct OutputConfig {
  std::string dir = "out";
  std::vector<std::string> formats{"json", "csv"};
};

struct BenchConfig {
  int version = 1;
  std::uint64_t seed = 1;
  DeviceModel device;  // ground truth driven by the simulator
  CalibrationConfig calibration;
  SuiteConfig suite;
  ExtrapolationConfig extrapolation;
  OutputConfig output;

  // Throws std::domain_error / std::invalid_argument on bad settings.
  void validate() const;
};

// Everything derived for one cycle count: measurements ordered by noise
// factor, the convergence series over growing prefixes, and the headline
// mitigability score.
struct MBlock {
  int m_cycles = 0;
  double ideal_value = 0.0;          // noiseless reference, phase units
  std::vector<double> epsilons;      // ascending, one per record
  std::vector<MeasurementRecord> records;  // same order as epsilons
  std::vector<ExtrapolationResult> convergence;  // prefix fits, D = 2..n
  ExtrapolationResult final_fit;     // estimator at full dataset size
  std::optional<ExtrapolationResult> high_order;  // full-order Richardson
  std::optional<double> reduced_chi2;  // linearity diagnostic of final_fit
  bool nonlinear_flagged = false;
  double delta_final = 0.0;       // |ideal - estimate|, phase units
  double delta_normalized = 0.0;  // delta_final / |theta1 - theta0|
  std::string method;             // estimator tag ("none" when no data)
  std::vector<std::string> notes;
};

struct MitigabilityReport {
  int version = 1;
  std::uint64_t seed = 0;
  std::string model_source;  // which model produced the noise factors
  DeviceModel model_used;
  FitResult power_law;        // calibration provenance (defaulted when the
  FitResult t1_fit;           // ground-truth model is used directly)
  FitResult amplitude_noise;
  std::vector<std::string> calibration_notes;
  double theta_scale = 0.0;  // |theta1 - theta0|, the delta normalizer
  std::vector<MBlock> blocks;  // ascending in m_cycles, one per cycle count
  std::vector<std::string> notes;
};

// One program per (M, c) pair, ordered M-major. Amplitudes come from the
// model's inverse power law at tau = c * tau0; per-spec seeds are derived
// from `seed` by position. Throws on duplicate stretch factors.
std::vector<ExperimentSpec> build_program_suite(const std::vector<int>& m_list,
                                                const std::vector<double>& c_list,
                                                double tau0,
                                                const DeviceModel& model,
                                                int shots, std::uint64_t seed);

// Integrated error rate over the whole program: M * tau * total_rate at the
// amplitude that realizes tau. Strictly increasing in M and in tau.
double noise_factor(int m_cycles, double period, const DeviceModel& model);

struct IngestOutcome {
  std::vector<MeasurementRecord> records;  // suite order, matched by label
  std::vector<std::string> diagnostics;    // unmatched or missing labels
};

// Links externally measured results to suite specs by label. Means may be
// given in population or phase units ("units" field); phase means are mapped
// back through the model's readout line. Malformed records throw.
IngestOutcome ingest_results(const nlohmann::json& results,
                             const std::vector<ExperimentSpec>& suite,
                             const DeviceModel& model);

// End-to-end run: calibrate (unless configured for ground truth), build the
// suite, measure, extrapolate per cycle count, and assemble the report.
// Deterministic given the config seed.
MitigabilityReport run_benchmark(const BenchConfig& config);

// Same pipeline, but measurement records are taken from an external results
// document instead of the simulator (hardware replay).
MitigabilityReport run_benchmark(const BenchConfig& config,
                                 const nlohmann::json& external_results);

// Schedule document: everything an external executor needs to run the suite
// and report results back by label.
nlohmann::json export_schedules(const std::vector<ExperimentSpec>& suite,
                                const DeviceModel& model);
std::vector<ExperimentSpec> import_schedules(const nlohmann::json& doc);

// Results document for simulated records, in population units.
nlohmann::json export_results(const std::vector<MeasurementRecord>& records);

// Writes report.json and/or the measurement and convergence CSV tables into
// `dir`; returns the paths written.
std::vector<std::filesystem::path> render_report(
    const MitigabilityReport& report, const std::filesystem::path& dir,
    const std::vector<std::string>& formats);

void to_json(nlohmann::json& j, const SuiteConfig& config);
void from_json(const nlohmann::json& j, SuiteConfig& config);
void to_json(nlohmann::json& j, const ExtrapolationConfig& config);
void from_json(const nlohmann::json& j, ExtrapolationConfig& config);
void to_json(nlohmann::json& j, const OutputConfig& config);
void from_json(const nlohmann::json& j, OutputConfig& config);
void to_json(nlohmann::json& j, const BenchConfig& config);
void from_json(const nlohmann::json& j, BenchConfig& config);
void to_json(nlohmann::json& j, const MeasurementRecord& record);
void from_json(const nlohmann::json& j, MeasurementRecord& record);
void to_json(nlohmann::json& j, const ExtrapolationResult& result);
void from_json(const nlohmann::json& j, ExtrapolationResult& result);
void to_json(nlohmann::json& j, const MBlock& block);
void from_json(const nlohmann::json& j, MBlock& block);
void to_json(nlohmann::json& j, const MitigabilityReport& report);
void from_json(const nlohmann::json& j, MitigabilityReport& report);

}  // namespace mitbench
