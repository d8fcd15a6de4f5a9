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

#include "mitbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "mitbench/qubit_sim.hpp"
#include "format_util.hpp"

namespace mitbench {

void BenchConfig::validate() const {
  if (version != 1) throw std::domain_error("config: unsupported version");
  device.validate();
  if (extrapolation.model_source != "calibrated" &&
      extrapolation.model_source != "ground-truth")
    throw std::domain_error(
        "config: model_source must be \"calibrated\" or \"ground-truth\"");
  if (!(extrapolation.chi2_threshold > 0.0))
    throw std::domain_error("config: chi2_threshold must be positive");
  for (const std::string& format : output.formats)
    if (format != "json" && format != "csv")
      throw std::domain_error("config: unknown output format \"" + format + "\"");
  if (suite.m_cycles.empty() || suite.stretch_factors.empty())
    throw std::domain_error("config: suite grid is empty");
  // Grid values are validated again when the suite is built.
}

std::vector<ExperimentSpec> build_program_suite(const std::vector<int>& m_list,
                                                const std::vector<double>& c_list,
                                                double tau0,
                                                const DeviceModel& model,
                                                int shots, std::uint64_t seed) {
  model.validate();
  if (m_list.empty() || c_list.empty())
    throw std::domain_error("build_program_suite: empty grid");
  if (!(tau0 > 0.0) || !std::isfinite(tau0))
    throw std::domain_error("build_program_suite: tau0 must be positive");
  if (shots < 1)
    throw std::domain_error("build_program_suite: shots must be >= 1");
  for (int m : m_list)
    if (m < 1)
      throw std::domain_error("build_program_suite: cycle counts must be >= 1");
  for (std::size_t i = 0; i < m_list.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (m_list[i] == m_list[k])
        throw std::invalid_argument("build_program_suite: duplicate cycle count " +
                                    std::to_string(m_list[i]));
  for (std::size_t i = 0; i < c_list.size(); ++i) {
    if (!(c_list[i] >= 1.0) || !std::isfinite(c_list[i]))
      throw std::domain_error(
          "build_program_suite: stretch factors must be >= 1");
    // A repeated stretch factor would collapse two extrapolation nodes.
    for (std::size_t k = 0; k < i; ++k)
      if (c_list[i] == c_list[k])
        throw std::invalid_argument(
            "build_program_suite: duplicate stretch factor " +
            detail::format_compact(c_list[i]));
  }

  std::vector<ExperimentSpec> suite;
  suite.reserve(m_list.size() * c_list.size());
  std::uint64_t index = 0;
  for (int m : m_list) {
    for (double c : c_list) {
      ExperimentSpec spec;
      spec.label = "M" + std::to_string(m) + "_c" + detail::format_compact(c);
      spec.m_cycles = m;
      spec.stretch = c;
      spec.tau0 = tau0;
      spec.period = c * tau0;
      spec.amplitude = period_to_amplitude(model, spec.period);
      spec.shots = shots;
      spec.seed = mix_seed(seed, index++);
      spec.validate();
      suite.push_back(std::move(spec));
    }
  }
  return suite;
}

double noise_factor(int m_cycles, double period, const DeviceModel& model) {
  if (m_cycles < 1) throw std::domain_error("noise_factor: cycle count must be >= 1");
  if (!(period > 0.0) || !std::isfinite(period))
    throw std::domain_error("noise_factor: period must be positive");
  return static_cast<double>(m_cycles) * period *
         total_rate(model, period_to_amplitude(model, period));
}

namespace {

// Parallel map over independent specs; record order matches suite order, so
// the result is deterministic regardless of scheduling.
std::vector<MeasurementRecord> measure_suite(
    const DeviceModel& truth, const std::vector<ExperimentSpec>& suite) {
  std::vector<MeasurementRecord> records(suite.size());
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  const std::size_t workers = std::max<std::size_t>(
      1, std::min<std::size_t>(std::thread::hardware_concurrency(), suite.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= suite.size()) return;
        try {
          records[i] = run_experiment(truth, suite[i]);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

MitigabilityReport run_benchmark_impl(const BenchConfig& config,
                                      const nlohmann::json* external_results) {
  config.validate();
  const DeviceModel& truth = config.device;

  MitigabilityReport report;
  report.version = 1;
  report.seed = config.seed;
  report.model_source = config.extrapolation.model_source;

  // Noise factors and the ideal baseline come from the experimenter's model:
  // the calibrated fit by default, the injected truth under ablation.
  DeviceModel model_used = truth;
  if (config.extrapolation.model_source == "calibrated") {
    CalibrationResult cal;
    try {
      cal = calibrate_device(truth, config.calibration, mix_seed(config.seed, 1));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("calibration stage: ") + e.what());
    }
    model_used = cal.model;
    report.power_law = cal.power_law;
    report.t1_fit = cal.t1_fit;
    report.amplitude_noise = cal.amplitude_noise;
    report.calibration_notes = cal.notes;
  } else {
    report.calibration_notes.push_back(
        "calibration skipped: ground-truth model in use");
  }
  report.model_used = model_used;
  report.theta_scale = std::abs(model_used.theta_scale());

  std::vector<ExperimentSpec> suite;
  try {
    suite = build_program_suite(config.suite.m_cycles,
                                config.suite.stretch_factors, config.suite.tau0,
                                model_used, config.suite.shots,
                                mix_seed(config.seed, 2));
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("suite stage: ") + e.what());
  }

  std::vector<MeasurementRecord> records;
  if (external_results != nullptr) {
    try {
      IngestOutcome outcome = ingest_results(*external_results, suite, model_used);
      records = std::move(outcome.records);
      for (std::string& d : outcome.diagnostics)
        report.notes.push_back("ingest: " + std::move(d));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("ingest stage: ") + e.what());
    }
  } else {
    try {
      records = measure_suite(truth, suite);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("measure stage: ") + e.what());
    }
  }

  const double scale = model_used.theta_scale();
  const double gamma_ref = period_to_amplitude(model_used, config.suite.tau0);

  std::vector<int> m_values = config.suite.m_cycles;
  std::sort(m_values.begin(), m_values.end());

  for (int m : m_values) {
    MBlock block;
    block.m_cycles = m;
    block.method = "none";

    // Noiseless reference of the same logical program: the unstretched drive
    // measured at its last population peak.
    block.ideal_value = model_used.p1_to_theta(rabi_population(
        gamma_ref, model_used.detuning,
        (static_cast<double>(m) - 0.25) * config.suite.tau0));

    struct Item {
      double eps;
      const MeasurementRecord* rec;
    };
    std::vector<Item> items;
    for (const MeasurementRecord& rec : records)
      if (rec.m_cycles == m)
        items.push_back({noise_factor(m, rec.period, model_used), &rec});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      if (a.eps != b.eps) return a.eps < b.eps;
      return a.rec->stretch < b.rec->stretch;
    });

    std::vector<NoisePoint> points;
    points.reserve(items.size());
    for (const Item& item : items)
      points.push_back({item.eps, item.rec->mean_theta,
                        item.rec->variance_of_mean * scale * scale});

    if (items.empty()) {
      block.notes.push_back("no measurements for this cycle count");
    } else if (items.size() == 1 || points.back().epsilon <= 1e-12) {
      // Degenerate block: nothing to extrapolate over, report the
      // least-stretched measurement directly.
      const Item& base = items.front();
      ExtrapolationResult direct;
      direct.weights = {1.0};
      direct.a_factors = {1.0};
      direct.estimate = base.rec->mean_theta;
      direct.variance = base.rec->variance_of_mean * scale * scale;
      direct.sum_b_squared = 1.0;
      direct.method = ExtrapolationMethod::direct;
      estimator_error(block.ideal_value, direct);
      block.final_fit = direct;
      block.method = direct.method_tag();
      block.notes.push_back(points.back().epsilon <= 1e-12
                                ? "all noise factors vanish; direct measurement reported"
                                : "single measurement; no extrapolation possible");
    } else {
      try {
        block.convergence = convergence_series(points, config.extrapolation.weighted);
      } catch (const std::exception& e) {
        block.convergence.clear();
        block.notes.push_back(std::string("extrapolation failed: ") + e.what());
      }
      if (!block.convergence.empty()) {
        for (ExtrapolationResult& fit : block.convergence)
          estimator_error(block.ideal_value, fit);
        block.final_fit = block.convergence.back();
        block.method = block.final_fit.method_tag();
        block.reduced_chi2 = block.final_fit.reduced_chi2;
        if (block.reduced_chi2 &&
            *block.reduced_chi2 > config.extrapolation.chi2_threshold) {
          block.nonlinear_flagged = true;
          block.notes.push_back(
              "linear fit reduced chi2 " +
              detail::format_compact(*block.reduced_chi2) + " exceeds threshold " +
              detail::format_compact(config.extrapolation.chi2_threshold) +
              "; first-order elimination is suspect at this depth");
        }
        if (config.extrapolation.high_order) {
          ExtrapolationResult full = richardson_estimate(points);
          estimator_error(block.ideal_value, full);
          block.high_order = full;
          if (points.size() > 4)
            block.notes.push_back(
                "full-order elimination amplifies shot variance by " +
                detail::format_compact(full.sum_b_squared) +
                "; reported for cost accounting only");
        }
      }
    }

    if (block.method != "none") {
      block.delta_final = block.final_fit.delta.value_or(0.0);
      block.delta_normalized =
          report.theta_scale > 0.0 ? block.delta_final / report.theta_scale : 0.0;
    }
    for (const Item& item : items) {
      block.epsilons.push_back(item.eps);
      block.records.push_back(*item.rec);
    }
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace

MitigabilityReport run_benchmark(const BenchConfig& config) {
  return run_benchmark_impl(config, nullptr);
}

MitigabilityReport run_benchmark(const BenchConfig& config,
                                 const nlohmann::json& external_results) {
  return run_benchmark_impl(config, &external_results);
}

}  // namespace mitbench
