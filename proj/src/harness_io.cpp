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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "mitbench/harness.hpp"
#include "format_util.hpp"

namespace mitbench {

namespace {

nlohmann::json opt_number(const std::optional<double>& value) {
  if (value && std::isfinite(*value)) return *value;
  return nullptr;
}

std::optional<double> read_opt_number(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

ExtrapolationMethod method_from_tag(const std::string& tag) {
  if (tag.rfind("richardson", 0) == 0) return ExtrapolationMethod::richardson;
  if (tag == "linear-lsq") return ExtrapolationMethod::linear_lsq;
  if (tag == "direct") return ExtrapolationMethod::direct;
  throw std::invalid_argument("unknown extrapolation method tag \"" + tag + "\"");
}

void require_version(const nlohmann::json& doc, const char* what) {
  const auto it = doc.find("version");
  if (it == doc.end() || !it->is_number_integer() || it->get<int>() != 1)
    throw std::invalid_argument(std::string(what) +
                                ": missing or unsupported version");
}

}  // namespace

nlohmann::json export_schedules(const std::vector<ExperimentSpec>& suite,
                                const DeviceModel& model) {
  model.validate();
  nlohmann::json programs = nlohmann::json::array();
  for (const ExperimentSpec& spec : suite) {
    spec.validate();
    programs.push_back({
        {"label", spec.label},
        {"m_cycles", spec.m_cycles},
        {"stretch", spec.stretch},
        {"tau0_dt", spec.tau0},
        {"period_dt", spec.period},
        {"amplitude", spec.amplitude},
        {"duration_dt", spec.duration()},
        {"shots", spec.shots},
        {"seed", spec.seed},
    });
  }
  return nlohmann::json{
      {"version", 1},
      {"dt_seconds", model.dt_seconds},
      {"programs", std::move(programs)},
  };
}

std::vector<ExperimentSpec> import_schedules(const nlohmann::json& doc) {
  if (!doc.is_object())
    throw std::invalid_argument("schedules: document must be a JSON object");
  require_version(doc, "schedules");
  const auto programs = doc.find("programs");
  if (programs == doc.end() || !programs->is_array())
    throw std::invalid_argument("schedules: \"programs\" must be an array");

  std::vector<ExperimentSpec> suite;
  suite.reserve(programs->size());
  std::size_t index = 0;
  for (const nlohmann::json& row : *programs) {
    const std::string where = "programs[" + std::to_string(index++) + "]";
    if (!row.is_object())
      throw std::invalid_argument(where + ": program must be an object");
    ExperimentSpec spec;
    try {
      spec.label = row.at("label").get<std::string>();
      spec.m_cycles = row.at("m_cycles").get<int>();
      spec.stretch = row.at("stretch").get<double>();
      spec.tau0 = row.at("tau0_dt").get<double>();
      spec.period = row.at("period_dt").get<double>();
      spec.amplitude = row.at("amplitude").get<double>();
      spec.shots = row.at("shots").get<int>();
      spec.seed = row.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
    spec.validate();
    if (std::abs(spec.period - spec.stretch * spec.tau0) > 1e-9 * spec.period)
      throw std::invalid_argument(where + ".period_dt: not stretch * tau0_dt");
    const double duration = row.at("duration_dt").get<double>();
    if (std::abs(duration - spec.duration()) > 1e-9 * spec.duration())
      throw std::invalid_argument(where + ".duration_dt: not m_cycles * period_dt");
    suite.push_back(std::move(spec));
  }
  return suite;
}

nlohmann::json export_results(const std::vector<MeasurementRecord>& records) {
  nlohmann::json rows = nlohmann::json::array();
  for (const MeasurementRecord& rec : records) {
    rows.push_back({
        {"label", rec.label},
        {"mean", rec.mean_p1},
        {"variance_of_mean", rec.variance_of_mean},
        {"shots", rec.shots},
    });
  }
  return nlohmann::json{
      {"version", 1},
      {"units", "p1"},
      {"results", std::move(rows)},
  };
}

IngestOutcome ingest_results(const nlohmann::json& results,
                             const std::vector<ExperimentSpec>& suite,
                             const DeviceModel& model) {
  model.validate();
  if (!results.is_object())
    throw std::invalid_argument("results: document must be a JSON object");
  require_version(results, "results");
  std::string units = "p1";
  if (const auto it = results.find("units"); it != results.end())
    units = it->get<std::string>();
  if (units != "p1" && units != "theta")
    throw std::invalid_argument("results: units must be \"p1\" or \"theta\"");
  const auto rows = results.find("results");
  if (rows == results.end() || !rows->is_array())
    throw std::invalid_argument("results: \"results\" must be an array");

  std::map<std::string, const ExperimentSpec*> by_label;
  for (const ExperimentSpec& spec : suite) by_label[spec.label] = &spec;

  IngestOutcome out;
  std::map<std::string, MeasurementRecord> matched;
  std::size_t index = 0;
  for (const nlohmann::json& row : *rows) {
    const std::string where = "results[" + std::to_string(index++) + "]";
    if (!row.is_object())
      throw std::invalid_argument(where + ": record must be an object");
    std::string label;
    double mean = 0.0, variance = 0.0;
    long long shots = 0;
    try {
      label = row.at("label").get<std::string>();
      mean = row.at("mean").get<double>();
      variance = row.at("variance_of_mean").get<double>();
      shots = row.at("shots").get<long long>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
    if (!std::isfinite(mean))
      throw std::invalid_argument(where + ".mean: must be finite");
    if (!(variance >= 0.0) || !std::isfinite(variance))
      throw std::invalid_argument(where + ".variance_of_mean: must be >= 0");
    if (shots < 1 || shots > std::numeric_limits<int>::max())
      throw std::invalid_argument(where + ".shots: out of range");

    const auto spec_it = by_label.find(label);
    if (spec_it == by_label.end()) {
      out.diagnostics.push_back("unknown label \"" + label + "\" skipped");
      continue;
    }
    if (matched.count(label) != 0) {
      out.diagnostics.push_back("duplicate result for label \"" + label +
                                "\" skipped; keeping the first");
      continue;
    }

    double mean_p1 = mean;
    double var_p1 = variance;
    if (units == "theta") {
      const double scale = model.theta_scale();
      mean_p1 = model.theta_to_p1(mean);
      var_p1 = variance / (scale * scale);
    }
    if (mean_p1 < -1e-9 || mean_p1 > 1.0 + 1e-9)
      throw std::invalid_argument(where + ".mean: population outside [0, 1]");
    mean_p1 = std::clamp(mean_p1, 0.0, 1.0);

    const ExperimentSpec& spec = *spec_it->second;
    MeasurementRecord rec;
    rec.label = spec.label;
    rec.mean_p1 = mean_p1;
    rec.mean_theta = model.p1_to_theta(mean_p1);
    rec.variance_of_mean = var_p1;
    rec.shots = static_cast<int>(shots);
    rec.m_cycles = spec.m_cycles;
    rec.stretch = spec.stretch;
    rec.period = spec.period;
    rec.amplitude = spec.amplitude;
    rec.seed = spec.seed;
    matched.emplace(label, std::move(rec));
  }

  for (const ExperimentSpec& spec : suite) {
    const auto it = matched.find(spec.label);
    if (it != matched.end())
      out.records.push_back(it->second);
    else
      out.diagnostics.push_back("no result for label \"" + spec.label + "\"");
  }
  return out;
}

namespace {

void append_cell(std::string& line, double value) {
  line += detail::format_compact(value);
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> render_report(
    const MitigabilityReport& report, const std::filesystem::path& dir,
    const std::vector<std::string>& formats) {
  for (const std::string& format : formats)
    if (format != "json" && format != "csv")
      throw std::invalid_argument("render_report: unknown format \"" + format + "\"");

  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;

  if (std::find(formats.begin(), formats.end(), "json") != formats.end()) {
    const std::filesystem::path path = dir / "report.json";
    write_file(path, nlohmann::json(report).dump(2) + "\n");
    written.push_back(path);
  }

  if (std::find(formats.begin(), formats.end(), "csv") != formats.end()) {
    std::string measurements = "m_cycles,stretch,label,epsilon,mean_theta,stderr_theta\n";
    for (const MBlock& block : report.blocks) {
      for (std::size_t i = 0; i < block.records.size(); ++i) {
        const MeasurementRecord& rec = block.records[i];
        std::string line = std::to_string(block.m_cycles);
        line += ',';
        append_cell(line, rec.stretch);
        line += ',';
        line += rec.label;
        line += ',';
        append_cell(line, block.epsilons[i]);
        line += ',';
        append_cell(line, rec.mean_theta);
        line += ',';
        append_cell(line, std::sqrt(rec.variance_of_mean) * report.theta_scale);
        line += '\n';
        measurements += line;
      }
    }
    const std::filesystem::path mpath = dir / "measurements.csv";
    write_file(mpath, measurements);
    written.push_back(mpath);

    std::string convergence = "m_cycles,dataset_size,estimate,stderr,delta\n";
    for (const MBlock& block : report.blocks) {
      for (std::size_t k = 0; k < block.convergence.size(); ++k) {
        const ExtrapolationResult& fit = block.convergence[k];
        std::string line = std::to_string(block.m_cycles);
        line += ',';
        line += std::to_string(k + 2);  // prefix fits start at two points
        line += ',';
        append_cell(line, fit.estimate);
        line += ',';
        append_cell(line, fit.standard_error());
        line += ',';
        append_cell(line, fit.delta.value_or(0.0));
        line += '\n';
        convergence += line;
      }
    }
    const std::filesystem::path cpath = dir / "convergence.csv";
    write_file(cpath, convergence);
    written.push_back(cpath);
  }
  return written;
}

void to_json(nlohmann::json& j, const SuiteConfig& config) {
  j = nlohmann::json{
      {"m_cycles", config.m_cycles},
      {"stretch_factors", config.stretch_factors},
      {"tau0", config.tau0},
      {"shots", config.shots},
  };
}

void from_json(const nlohmann::json& j, SuiteConfig& config) {
  config = SuiteConfig{};
  if (auto it = j.find("m_cycles"); it != j.end())
    config.m_cycles = it->get<std::vector<int>>();
  if (auto it = j.find("stretch_factors"); it != j.end())
    config.stretch_factors = it->get<std::vector<double>>();
  if (auto it = j.find("tau0"); it != j.end()) config.tau0 = it->get<double>();
  if (auto it = j.find("shots"); it != j.end()) config.shots = it->get<int>();
}

void to_json(nlohmann::json& j, const ExtrapolationConfig& config) {
  j = nlohmann::json{
      {"weighted", config.weighted},
      {"chi2_threshold", config.chi2_threshold},
      {"high_order", config.high_order},
      {"model_source", config.model_source},
  };
}

void from_json(const nlohmann::json& j, ExtrapolationConfig& config) {
  config = ExtrapolationConfig{};
  if (auto it = j.find("weighted"); it != j.end())
    config.weighted = it->get<bool>();
  if (auto it = j.find("chi2_threshold"); it != j.end())
    config.chi2_threshold = it->get<double>();
  if (auto it = j.find("high_order"); it != j.end())
    config.high_order = it->get<bool>();
  if (auto it = j.find("model_source"); it != j.end())
    config.model_source = it->get<std::string>();
}

void to_json(nlohmann::json& j, const OutputConfig& config) {
  j = nlohmann::json{{"dir", config.dir}, {"formats", config.formats}};
}

void from_json(const nlohmann::json& j, OutputConfig& config) {
  config = OutputConfig{};
  if (auto it = j.find("dir"); it != j.end()) config.dir = it->get<std::string>();
  if (auto it = j.find("formats"); it != j.end())
    config.formats = it->get<std::vector<std::string>>();
}

void to_json(nlohmann::json& j, const BenchConfig& config) {
  j = nlohmann::json{
      {"version", config.version},
      {"seed", config.seed},
      {"device", config.device},
      {"calibration", config.calibration},
      {"suite", config.suite},
      {"extrapolation", config.extrapolation},
      {"output", config.output},
  };
}

void from_json(const nlohmann::json& j, BenchConfig& config) {
  config = BenchConfig{};
  if (auto it = j.find("version"); it != j.end())
    config.version = it->get<int>();
  if (auto it = j.find("seed"); it != j.end())
    config.seed = it->get<std::uint64_t>();
  if (auto it = j.find("device"); it != j.end())
    config.device = it->get<DeviceModel>();
  if (auto it = j.find("calibration"); it != j.end())
    config.calibration = it->get<CalibrationConfig>();
  if (auto it = j.find("suite"); it != j.end())
    config.suite = it->get<SuiteConfig>();
  if (auto it = j.find("extrapolation"); it != j.end())
    config.extrapolation = it->get<ExtrapolationConfig>();
  if (auto it = j.find("output"); it != j.end())
    config.output = it->get<OutputConfig>();
}

void to_json(nlohmann::json& j, const MeasurementRecord& record) {
  j = nlohmann::json{
      {"label", record.label},
      {"mean_p1", record.mean_p1},
      {"mean_theta", record.mean_theta},
      {"variance_of_mean", record.variance_of_mean},
      {"shots", record.shots},
      {"m_cycles", record.m_cycles},
      {"stretch", record.stretch},
      {"period", record.period},
      {"amplitude", record.amplitude},
      {"seed", record.seed},
  };
}

void from_json(const nlohmann::json& j, MeasurementRecord& record) {
  record = MeasurementRecord{};
  record.label = j.at("label").get<std::string>();
  record.mean_p1 = j.at("mean_p1").get<double>();
  record.mean_theta = j.at("mean_theta").get<double>();
  record.variance_of_mean = j.at("variance_of_mean").get<double>();
  record.shots = j.at("shots").get<int>();
  record.m_cycles = j.at("m_cycles").get<int>();
  record.stretch = j.at("stretch").get<double>();
  record.period = j.at("period").get<double>();
  record.amplitude = j.at("amplitude").get<double>();
  record.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const ExtrapolationResult& result) {
  j = nlohmann::json{
      {"weights", result.weights},
      {"a_factors", result.a_factors},
      {"estimate", result.estimate},
      {"variance", result.variance},
      {"sum_b_squared", result.sum_b_squared},
      {"delta", opt_number(result.delta)},
      {"slope", opt_number(result.slope)},
      {"reduced_chi2", opt_number(result.reduced_chi2)},
      {"shot_weighted", result.shot_weighted},
      {"method", result.method_tag()},
  };
}

void from_json(const nlohmann::json& j, ExtrapolationResult& result) {
  result = ExtrapolationResult{};
  result.weights = j.at("weights").get<std::vector<double>>();
  result.a_factors = j.at("a_factors").get<std::vector<double>>();
  result.estimate = j.at("estimate").get<double>();
  result.variance = j.at("variance").get<double>();
  result.sum_b_squared = j.at("sum_b_squared").get<double>();
  result.delta = read_opt_number(j.at("delta"));
  result.slope = read_opt_number(j.at("slope"));
  result.reduced_chi2 = read_opt_number(j.at("reduced_chi2"));
  result.shot_weighted = j.at("shot_weighted").get<bool>();
  result.method = method_from_tag(j.at("method").get<std::string>());
}

void to_json(nlohmann::json& j, const MBlock& block) {
  j = nlohmann::json{
      {"m_cycles", block.m_cycles},
      {"ideal_value", block.ideal_value},
      {"epsilons", block.epsilons},
      {"records", block.records},
      {"convergence", block.convergence},
      {"final_fit", block.final_fit},
      {"high_order", block.high_order ? nlohmann::json(*block.high_order)
                                      : nlohmann::json(nullptr)},
      {"reduced_chi2", opt_number(block.reduced_chi2)},
      {"nonlinear_flagged", block.nonlinear_flagged},
      {"delta_final", block.delta_final},
      {"delta_normalized", block.delta_normalized},
      {"method", block.method},
      {"notes", block.notes},
  };
}

void from_json(const nlohmann::json& j, MBlock& block) {
  block = MBlock{};
  block.m_cycles = j.at("m_cycles").get<int>();
  block.ideal_value = j.at("ideal_value").get<double>();
  block.epsilons = j.at("epsilons").get<std::vector<double>>();
  block.records = j.at("records").get<std::vector<MeasurementRecord>>();
  block.convergence = j.at("convergence").get<std::vector<ExtrapolationResult>>();
  block.final_fit = j.at("final_fit").get<ExtrapolationResult>();
  if (!j.at("high_order").is_null())
    block.high_order = j.at("high_order").get<ExtrapolationResult>();
  block.reduced_chi2 = read_opt_number(j.at("reduced_chi2"));
  block.nonlinear_flagged = j.at("nonlinear_flagged").get<bool>();
  block.delta_final = j.at("delta_final").get<double>();
  block.delta_normalized = j.at("delta_normalized").get<double>();
  block.method = j.at("method").get<std::string>();
  block.notes = j.at("notes").get<std::vector<std::string>>();
}

void to_json(nlohmann::json& j, const MitigabilityReport& report) {
  j = nlohmann::json{
      {"version", report.version},
      {"seed", report.seed},
      {"model_source", report.model_source},
      {"model_used", report.model_used},
      {"power_law", report.power_law},
      {"t1_fit", report.t1_fit},
      {"amplitude_noise", report.amplitude_noise},
      {"calibration_notes", report.calibration_notes},
      {"theta_scale", report.theta_scale},
      {"blocks", report.blocks},
      {"notes", report.notes},
  };
}

void from_json(const nlohmann::json& j, MitigabilityReport& report) {
  report = MitigabilityReport{};
  report.version = j.at("version").get<int>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.model_source = j.at("model_source").get<std::string>();
  report.model_used = j.at("model_used").get<DeviceModel>();
  report.power_law = j.at("power_law").get<FitResult>();
  report.t1_fit = j.at("t1_fit").get<FitResult>();
  report.amplitude_noise = j.at("amplitude_noise").get<FitResult>();
  report.calibration_notes =
      j.at("calibration_notes").get<std::vector<std::string>>();
  report.theta_scale = j.at("theta_scale").get<double>();
  report.blocks = j.at("blocks").get<std::vector<MBlock>>();
  report.notes = j.at("notes").get<std::vector<std::string>>();
}

}  // namespace mitbench
