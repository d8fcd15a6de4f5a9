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

#include "mitbench/experiment.hpp"

#include <cmath>
#include <stdexcept>

namespace mitbench {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t x = base + 0x9e3779b97f4a7c15ull * (salt + 1ull);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

void ExperimentSpec::validate() const {
  if (m_cycles < 1) throw std::domain_error("ExperimentSpec: m_cycles must be >= 1");
  if (!(stretch >= 1.0)) throw std::domain_error("ExperimentSpec: stretch must be >= 1");
  if (!(tau0 > 0.0)) throw std::domain_error("ExperimentSpec: tau0 must be positive");
  if (!(period > 0.0) || !std::isfinite(period))
    throw std::domain_error("ExperimentSpec: period must be positive");
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw std::domain_error("ExperimentSpec: amplitude must be positive");
  if (shots < 1) throw std::domain_error("ExperimentSpec: shots must be >= 1");
}

}  // namespace mitbench
