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
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mitbench/device_model.hpp"

namespace mitbench {

/** Outcome of one least-squares fit. */
struct FitResult {
  std::vector<double> params;
  std::vector<double> std_errors;  // per parameter; 0 when not estimable
  double rss = 0.0;                // residual sum of squares
  double reduced_chi2 = 0.0;       // residual mean square, rss / (n - p)
  bool converged = false;
  int iterations = 0;
  std::string note;  // diagnostics: degeneracies, iteration cap, window flags
};

void to_json(nlohmann::json& j, const FitResult& fit);
void from_json(const nlohmann::json& j, FitResult& fit);

// Resonant Rabi envelopes decay at 3/4 of the underlying total rate: the
// damped (y, z) subsystem has eigenvalues with real part
// -(rate + rate/2) / 2. Divide a fitted envelope rate by this ratio to
// recover the total rate.
inline constexpr double kDrivenEnvelopeRateRatio = 0.75;

// Least-squares fit of offset + amplitude * sin^2(2 pi t / period + phase).
// Initialization by periodogram scan plus linear phase/amplitude solve,
// then damped Gauss-Newton refinement (cap 100 iterations, relative
// parameter tolerance 1e-10). Requires at least 8 points; flags
// non-convergence when the data span fewer than 1.5 fitted periods or the
// fitted amplitude is indistinguishable from zero.
// params = {offset, amplitude, period, phase}.
FitResult fit_sinusoid(const std::vector<double>& times,
                       const std::vector<double>& values);

// Log-log linear regression for period = a * amplitude^b.
// Requires >= 3 points with positive coordinates. params = {a, b}.
FitResult fit_power_law(const std::vector<double>& amplitudes,
                        const std::vector<double>& periods);

// Fit of A * exp(-rate * t): log-linear regression initialization followed
// by Gauss-Newton refinement. Requires >= 3 points with positive values.
// params = {A, rate}.
FitResult fit_exponential_decay(const std::vector<double>& times,
                                const std::vector<double>& values);

// Relaxation fit on measured P1(t) from an excited-state preparation with
// the drive off. params = {T1}; T1 is +inf when no decay is measurable.
FitResult measure_t1(const std::vector<double>& times,
                     const std::vector<double>& p1_values);

/** Measurement schedule for the undriven relaxation experiment. */
struct T1Protocol {
  int points = 9;
  int shots = 4096;
  double max_time = 40000.0;       // window cap, dt
  double initial_window = 500.0;   // starting window, doubled until decayed
};

// Simulated relaxation route: prepares |1>, samples `points` delays with
// `shots` each, widening the window until the tail has visibly decayed,
// then fits as the data route above. Deterministic for a fixed seed.
FitResult measure_t1(const DeviceModel& truth, const T1Protocol& protocol,
                     std::uint64_t seed);

// Ordinary least squares of (rate - 1/t1) against amplitude.
// `rates` holds (amplitude, total rate) pairs; requires >= 2 distinct
// amplitudes. params = {kappa0, kappa1}.
FitResult extract_amplitude_noise(
    const std::vector<std::pair<double, double>>& rates, double t1);

/** Knobs for the end-to-end calibration pipeline. */
struct CalibrationConfig {
  std::vector<double> scan_amplitudes = {0.12, 0.18, 0.27, 0.4, 0.55, 0.7};
  int trace_points = 64;   // samples per Rabi trace used for the period fit
  int trace_cycles = 3;    // nominal cycles covered by the trace window
  int shots = 1024;        // shots per sampled point
  T1Protocol t1;
  int refine_cycles = 96;   // second, longer interrogation window (0 = skip)
  int refine_points = 768;  // samples in the refinement trace
  int envelope_points = 48;          // peaks sampled per decay measurement
  double envelope_max_window = 40000.0;  // cap on the decay window, dt
  double envelope_floor = 0.1;       // drop peak deviations below this
  double envelope_tail_ratio = 0.3;  // widen window until tail/head <= this
};

void from_json(const nlohmann::json& j, CalibrationConfig& config);
void to_json(nlohmann::json& j, const CalibrationConfig& config);

/** Everything the calibration pipeline learned about the device. */
struct CalibrationResult {
  DeviceModel model;          // fitted model; readout map and dt copied over
  FitResult power_law;        // {a, b}
  FitResult t1_fit;           // {T1}
  FitResult amplitude_noise;  // {kappa0, kappa1}, raw least-squares values
  std::vector<FitResult> period_fits;    // per scan amplitude
  std::vector<FitResult> envelope_fits;  // per scan amplitude, raw envelope rate
  std::vector<std::pair<double, double>> rates;  // (amplitude, total rate)
  std::vector<std::string> notes;
};

// Runs the full pipeline against a simulated device: period scan and power
// law, undriven T1, driven decay envelopes per amplitude (envelope rates
// converted by kDrivenEnvelopeRateRatio), and the linear amplitude-noise
// fit. Envelope rates inherit a dephasing bias from the finite-precision
// period estimate; at the default budgets the recovered slope is trusted to
// 25%. Tiny negative fitted kappa values are clamped to zero in the model;
// the raw fit is kept. Throws std::runtime_error when a stage leaves too
// little data to continue.
CalibrationResult calibrate_device(const DeviceModel& truth,
                                   const CalibrationConfig& config,
                                   std::uint64_t seed);

void to_json(nlohmann::json& j, const CalibrationResult& result);

}  // namespace mitbench
