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
#include <vector>

#include "mitbench/device_model.hpp"
#include "mitbench/experiment.hpp"

namespace mitbench {

/** Square-envelope drive window with a scale on all dissipative rates. */
struct DriveSpec {
  double amplitude = 0.0;    // G, amplitude units
  double detuning = 0.0;     // rad/dt
  double duration = 0.0;     // dt
  double noise_scale = 1.0;  // multiplier on total_rate, >= 0

  void validate() const;
};

/**
 * Bloch vector (x, y, z); z = +1 is the ground state |0>, so the
 * excited-state population is (1 - z) / 2. Physical states satisfy
 * x^2 + y^2 + z^2 <= 1 (up to 1e-9 numerical slack).
 */
struct BlochState {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  double norm() const;
  double excited_population() const { return 0.5 * (1.0 - z); }

  static BlochState ground() { return {0.0, 0.0, 1.0}; }
  static BlochState excited() { return {0.0, 0.0, -1.0}; }
};

struct TrajectoryPoint {
  double time = 0.0;
  BlochState state;
};

struct EvolveResult {
  std::vector<TrajectoryPoint> samples;  // one per requested sample time
  BlochState final_state;                // state at drive.duration
};

// Excited-state population of the noiseless driven qubit:
// P1(t) = G^2/(G^2+D^2) * sin^2(w t), w = sqrt(G^2+D^2).
// Returns 0 by convention when G = D = 0.
double rabi_population(double gamma_drive, double detuning, double t);

// Integrates the Bloch equations for the drive G sx + D sz with amplitude
// damping toward ground at rate noise_scale * total_rate(model, G):
//   x' = -2 D y - r/2 x,  y' = 2 D x - 2 G z - r/2 y,  z' = 2 G y + r (1 - z).
// Fixed-step classical RK4; `step` = 0 selects the default of one
// thousandth of the Rabi cycle (or of the duration when the drive is off).
// `sample_times` must be non-decreasing and within [0, duration].
// Throws std::invalid_argument on bad arguments and std::runtime_error when
// the integration produces a non-finite or unphysical state.
EvolveResult evolve(const DeviceModel& model, const DriveSpec& drive,
                    const BlochState& initial,
                    const std::vector<double>& sample_times,
                    double step = 0.0);

// Draws `shots` Bernoulli(p1) outcomes from a seeded generator and returns
// the sample mean, its readout-phase image, and the shot-noise variance of
// the mean, p_hat (1 - p_hat) / shots. Deterministic for a fixed seed.
MeasurementRecord sample_shots(double p1, int shots, std::uint64_t seed,
                               const DeviceModel& model);

// Runs one stretched Rabi program end to end: evolve from ground for
// M cycles, read out at the population peak nearest the end of the program
// (t = M tau - tau/4), and shot-sample the result.
MeasurementRecord run_experiment(const DeviceModel& model,
                                 const ExperimentSpec& spec);

// Noiseless analytic expectation for the same program and readout time.
double ideal_observable_p1(const DeviceModel& model, const ExperimentSpec& spec);

}  // namespace mitbench
