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

namespace mitbench {

// Deterministic sub-seed derivation (splitmix64 finalizer over a salted base).
// Distinct salts give statistically independent streams from one base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

/**
 * One stretched Rabi program: M full cycles at period tau = c * tau0,
 * driven at the amplitude programmed for that period.
 */
struct ExperimentSpec {
  std::string label;
  int m_cycles = 1;        // M, number of Rabi cycles
  double stretch = 1.0;    // c, period stretch factor
  double tau0 = 10.0;      // base period, dt
  double period = 10.0;    // tau = c * tau0, dt
  double amplitude = 0.0;  // drive amplitude programmed for `period`
  int shots = 1024;
  std::uint64_t seed = 0;

  double duration() const { return static_cast<double>(m_cycles) * period; }

  // Population maximum nearest the end of the program.
  double measure_time() const { return duration() - 0.25 * period; }

  // Throws std::domain_error unless m_cycles >= 1, stretch >= 1, tau0 > 0,
  // period > 0, amplitude > 0, shots >= 1.
  void validate() const;
};

/** Shot-sampled expectation value for one program, with its metadata. */
struct MeasurementRecord {
  std::string label;
  double mean_p1 = 0.0;
  double mean_theta = 0.0;
  double variance_of_mean = 0.0;  // shot-noise variance of mean_p1 (p1 units)
  int shots = 0;
  int m_cycles = 0;
  double stretch = 1.0;
  double period = 0.0;
  double amplitude = 0.0;
  std::uint64_t seed = 0;
};

}  // namespace mitbench
