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

#include "mitbench/qubit_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mitbench {

namespace {

constexpr double kBlochNormSlack = 1e-9;
// Substeps per Rabi cycle for the default integration step. One thousandth
// of a cycle keeps the accumulated RK4 phase error below 1e-7 over hundreds
// of cycles.
constexpr int kDefaultStepsPerCycle = 1000;

struct Deriv {
  double x, y, z;
};

inline Deriv bloch_deriv(double two_gamma, double two_delta, double rate,
                         const BlochState& s) {
  return {
      -two_delta * s.y - 0.5 * rate * s.x,
      two_delta * s.x - two_gamma * s.z - 0.5 * rate * s.y,
      two_gamma * s.y + rate * (1.0 - s.z),
  };
}

inline BlochState rk4_step(double two_gamma, double two_delta, double rate,
                           const BlochState& s, double h) {
  const Deriv k1 = bloch_deriv(two_gamma, two_delta, rate, s);
  const BlochState s2{s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y, s.z + 0.5 * h * k1.z};
  const Deriv k2 = bloch_deriv(two_gamma, two_delta, rate, s2);
  const BlochState s3{s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y, s.z + 0.5 * h * k2.z};
  const Deriv k3 = bloch_deriv(two_gamma, two_delta, rate, s3);
  const BlochState s4{s.x + h * k3.x, s.y + h * k3.y, s.z + h * k3.z};
  const Deriv k4 = bloch_deriv(two_gamma, two_delta, rate, s4);
  const double w = h / 6.0;
  return {s.x + w * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          s.y + w * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
          s.z + w * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z)};
}

void check_physical(const BlochState& s) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z))
    throw std::runtime_error("evolve: integration produced a non-finite state");
  if (s.norm() > 1.0 + kBlochNormSlack)
    throw std::runtime_error("evolve: integration left the Bloch ball");
}

// Advances `state` from t_from to t_to using steps of at most `max_step`.
void advance(BlochState& state, double two_gamma, double two_delta, double rate,
             double t_from, double t_to, double max_step) {
  const double span = t_to - t_from;
  if (span <= 0.0) return;
  const int n = std::max(1, static_cast<int>(std::ceil(span / max_step)));
  const double h = span / n;
  for (int i = 0; i < n; ++i) {
    state = rk4_step(two_gamma, two_delta, rate, state, h);
    check_physical(state);
  }
}

}  // namespace

void DriveSpec::validate() const {
  if (!(duration >= 0.0) || !std::isfinite(duration))
    throw std::domain_error("DriveSpec: duration must be non-negative and finite");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
    throw std::domain_error("DriveSpec: noise_scale must be non-negative");
  if (!std::isfinite(amplitude) || !std::isfinite(detuning))
    throw std::domain_error("DriveSpec: amplitude and detuning must be finite");
}

double BlochState::norm() const { return std::sqrt(x * x + y * y + z * z); }

double rabi_population(double gamma_drive, double detuning, double t) {
  const double w2 = gamma_drive * gamma_drive + detuning * detuning;
  if (w2 == 0.0) return 0.0;
  const double s = std::sin(std::sqrt(w2) * t);
  return (gamma_drive * gamma_drive / w2) * s * s;
}

EvolveResult evolve(const DeviceModel& model, const DriveSpec& drive,
                    const BlochState& initial,
                    const std::vector<double>& sample_times, double step) {
  model.validate();
  drive.validate();
  if (initial.norm() > 1.0 + kBlochNormSlack)
    throw std::invalid_argument("evolve: initial state outside the Bloch ball");
  if (!(step >= 0.0) || !std::isfinite(step))
    throw std::invalid_argument("evolve: step must be non-negative and finite");

  double max_step = step;
  if (max_step == 0.0) {
    const double omega = std::hypot(drive.amplitude, drive.detuning);
    const double cycle = omega > 0.0 ? 2.0 * std::numbers::pi / omega : drive.duration;
    max_step = cycle / kDefaultStepsPerCycle;
  }
  if (max_step <= 0.0 && drive.duration > 0.0)
    throw std::invalid_argument("evolve: cannot determine an integration step");

  const double rate =
      drive.noise_scale * total_rate(model, std::abs(drive.amplitude));
  const double two_gamma = 2.0 * drive.amplitude;
  const double two_delta = 2.0 * drive.detuning;

  EvolveResult result;
  result.samples.reserve(sample_times.size());
  BlochState state = initial;
  double t = 0.0;
  for (double ts : sample_times) {
    if (!(ts >= 0.0) || ts > drive.duration * (1.0 + 1e-12) + 1e-12)
      throw std::invalid_argument("evolve: sample time outside [0, duration]");
    if (ts < t)
      throw std::invalid_argument("evolve: sample times must be non-decreasing");
    advance(state, two_gamma, two_delta, rate, t, std::min(ts, drive.duration),
            max_step);
    t = ts;
    result.samples.push_back({ts, state});
  }
  advance(state, two_gamma, two_delta, rate, t, drive.duration, max_step);
  result.final_state = state;
  return result;
}

MeasurementRecord sample_shots(double p1, int shots, std::uint64_t seed,
                               const DeviceModel& model) {
  if (!(p1 >= 0.0 && p1 <= 1.0))
    throw std::domain_error("sample_shots: p1 must lie in [0, 1]");
  if (shots < 1) throw std::domain_error("sample_shots: shots must be >= 1");

  std::mt19937_64 rng(seed);
  int successes = 0;
  for (int i = 0; i < shots; ++i) {
    // Top 53 bits give a uniform deviate on [0, 1) with a portable layout.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < p1) ++successes;
  }
  const double mean = static_cast<double>(successes) / shots;

  MeasurementRecord rec;
  rec.mean_p1 = mean;
  rec.mean_theta = model.p1_to_theta(mean);
  rec.variance_of_mean = mean * (1.0 - mean) / shots;
  rec.shots = shots;
  rec.seed = seed;
  return rec;
}

MeasurementRecord run_experiment(const DeviceModel& model,
                                 const ExperimentSpec& spec) {
  spec.validate();
  DriveSpec drive{spec.amplitude, model.detuning, spec.duration(), 1.0};
  const EvolveResult evo =
      evolve(model, drive, BlochState::ground(), {spec.measure_time()});
  const double p1 =
      std::clamp(evo.samples.front().state.excited_population(), 0.0, 1.0);

  MeasurementRecord rec = sample_shots(p1, spec.shots, spec.seed, model);
  rec.label = spec.label;
  rec.m_cycles = spec.m_cycles;
  rec.stretch = spec.stretch;
  rec.period = spec.period;
  rec.amplitude = spec.amplitude;
  return rec;
}

double ideal_observable_p1(const DeviceModel& model, const ExperimentSpec& spec) {
  spec.validate();
  return rabi_population(spec.amplitude, model.detuning, spec.measure_time());
}

}  // namespace mitbench
