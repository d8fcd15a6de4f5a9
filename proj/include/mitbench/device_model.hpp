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

#include <numbers>

#include <json.hpp>

namespace mitbench {

/**
 * Physical parameters of a single driven qubit, together with the closed-form
 * maps between drive amplitude, Rabi period, and decay rates.
 *
 * All internal times are in dt units; dt_seconds is a display/export
 * conversion only. The drive-dependent decay rate is linear in amplitude,
 * gamma(G) = kappa0 + kappa1 * G, on top of the bare 1/t1.
 */
struct DeviceModel {
  double t1 = 20000.0;  // bare relaxation time, dt (may be +inf for "no decay")
  double kappa0 = 0.0;  // amplitude-dependent rate intercept, 1/dt
  // Slope chosen so drive-induced decay at the base period (10 dt) equals 1/t1.
  double kappa1 = 1.0 / (4000.0 * std::numbers::pi);
  // Power law tau(G) = power_a * G^power_b. For the resonant drive H = G sx
  // one cycle spans tau = 2*pi/G, hence the 2*pi prefactor and b = -1.
  double power_a = 2.0 * std::numbers::pi;
  double power_b = -1.0;
  double detuning = 0.0;       // drive-qubit detuning, rad/dt
  double theta0 = 0.0;         // readout phase of |0>
  double theta1 = 40.0;        // readout phase of |1>
  double dt_seconds = 3.55e-9; // physical duration of one dt tick

  // Throws std::domain_error when any parameter invariant is violated:
  // t1 > 0, power_a > 0, power_b < 0, kappa0 >= 0, kappa1 >= 0,
  // theta0 != theta1, dt_seconds > 0.
  void validate() const;

  double theta_scale() const { return theta1 - theta0; }

  // Affine readout map from excited-state population to phase units.
  double p1_to_theta(double p1) const { return theta0 + p1 * (theta1 - theta0); }
  double theta_to_p1(double theta) const { return (theta - theta0) / (theta1 - theta0); }
};

// tau = a * G^b. Throws std::domain_error for gamma_drive <= 0.
double amplitude_to_period(const DeviceModel& model, double gamma_drive);

// G = (tau / a)^(1/b), the exact inverse of amplitude_to_period.
// Throws std::domain_error for period <= 0.
double period_to_amplitude(const DeviceModel& model, double period);

// Generalized relaxation rate 1/t1 + kappa0 + kappa1 * G.
// Throws std::domain_error for gamma_drive < 0.
double total_rate(const DeviceModel& model, double gamma_drive);

// JSON mapping. An infinite t1 is serialized as null and read back as +inf.
void to_json(nlohmann::json& j, const DeviceModel& model);
void from_json(const nlohmann::json& j, DeviceModel& model);

}  // namespace mitbench
