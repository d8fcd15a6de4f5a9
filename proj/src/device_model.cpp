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

#include "mitbench/device_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mitbench {

void DeviceModel::validate() const {
  // Negated comparisons also reject NaN.
  if (!(t1 > 0.0)) throw std::domain_error("DeviceModel: t1 must be positive");
  if (!(power_a > 0.0) || !std::isfinite(power_a))
    throw std::domain_error("DeviceModel: power_a must be positive and finite");
  if (!(power_b < 0.0) || !std::isfinite(power_b))
    throw std::domain_error("DeviceModel: power_b must be negative and finite");
  if (!(kappa0 >= 0.0) || !std::isfinite(kappa0))
    throw std::domain_error("DeviceModel: kappa0 must be non-negative");
  if (!(kappa1 >= 0.0) || !std::isfinite(kappa1))
    throw std::domain_error("DeviceModel: kappa1 must be non-negative");
  if (!std::isfinite(detuning))
    throw std::domain_error("DeviceModel: detuning must be finite");
  if (!std::isfinite(theta0) || !std::isfinite(theta1) || theta0 == theta1)
    throw std::domain_error("DeviceModel: readout phases must be finite and distinct");
  if (!(dt_seconds > 0.0) || !std::isfinite(dt_seconds))
    throw std::domain_error("DeviceModel: dt_seconds must be positive");
}

double amplitude_to_period(const DeviceModel& model, double gamma_drive) {
  if (!(gamma_drive > 0.0))
    throw std::domain_error("amplitude_to_period: amplitude must be positive");
  return model.power_a * std::pow(gamma_drive, model.power_b);
}

double period_to_amplitude(const DeviceModel& model, double period) {
  if (!(period > 0.0))
    throw std::domain_error("period_to_amplitude: period must be positive");
  return std::pow(period / model.power_a, 1.0 / model.power_b);
}

double total_rate(const DeviceModel& model, double gamma_drive) {
  if (!(gamma_drive >= 0.0))
    throw std::domain_error("total_rate: amplitude must be non-negative");
  return 1.0 / model.t1 + model.kappa0 + model.kappa1 * gamma_drive;
}

void to_json(nlohmann::json& j, const DeviceModel& model) {
  j = nlohmann::json{
      {"kappa0", model.kappa0},
      {"kappa1", model.kappa1},
      {"power_a", model.power_a},
      {"power_b", model.power_b},
      {"detuning", model.detuning},
      {"theta0", model.theta0},
      {"theta1", model.theta1},
      {"dt_seconds", model.dt_seconds},
  };
  if (std::isinf(model.t1)) {
    j["t1"] = nullptr;
  } else {
    j["t1"] = model.t1;
  }
}

void from_json(const nlohmann::json& j, DeviceModel& model) {
  model = DeviceModel{};
  if (auto it = j.find("t1"); it != j.end()) {
    model.t1 = it->is_null() ? std::numeric_limits<double>::infinity()
                             : it->get<double>();
  }
  if (auto it = j.find("kappa0"); it != j.end()) model.kappa0 = it->get<double>();
  if (auto it = j.find("kappa1"); it != j.end()) model.kappa1 = it->get<double>();
  if (auto it = j.find("power_a"); it != j.end()) model.power_a = it->get<double>();
  if (auto it = j.find("power_b"); it != j.end()) model.power_b = it->get<double>();
  if (auto it = j.find("detuning"); it != j.end()) model.detuning = it->get<double>();
  if (auto it = j.find("theta0"); it != j.end()) model.theta0 = it->get<double>();
  if (auto it = j.find("theta1"); it != j.end()) model.theta1 = it->get<double>();
  if (auto it = j.find("dt_seconds"); it != j.end()) model.dt_seconds = it->get<double>();
  model.validate();
}

}  // namespace mitbench
