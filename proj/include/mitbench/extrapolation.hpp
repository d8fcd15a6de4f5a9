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

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mitbench {

/** One measured expectation value at a known noise factor. */
struct NoisePoint {
  double epsilon = 0.0;   // integrated noise factor, > 0
  double value = 0.0;     // expectation value (population or phase units)
  double variance = 0.0;  // shot-noise variance of the mean; 0 means unknown
};

enum class ExtrapolationMethod { richardson, linear_lsq, direct };

/** Zero-noise estimate with its weights and propagated uncertainty. */
struct ExtrapolationResult {
  std::vector<double> weights;    // b_i
  std::vector<double> a_factors;  // a_i = eps_i / eps_0 (a_0 = 1)
  double estimate = 0.0;
  double variance = 0.0;       // propagated variance of the estimate
  double sum_b_squared = 0.0;  // variance amplification of the weights
  std::optional<double> delta; // |ideal - estimate|, set by estimator_error
  std::optional<double> slope; // fitted slope (linear method only)
  std::optional<double> reduced_chi2;  // linearity diagnostic (linear, n > 2)
  bool shot_weighted = false;  // true when 1/variance weights were used
  ExtrapolationMethod method = ExtrapolationMethod::richardson;

  double standard_error() const { return std::sqrt(std::max(variance, 0.0)); }

  // "richardson-<n>", "linear-lsq", or "direct".
  std::string method_tag() const;
};

// Eliminator weights b_i = prod_{j != i} a_j / (a_j - a_i), the Lagrange
// basis at zero. They satisfy sum b_i = 1 and sum b_i a_i^k = 0 for
// k = 1..n-1, so the weighted combination cancels the first n-1 orders of
// the noise expansion. Factors must be positive and pairwise distinct.
std::vector<double> richardson_weights(const std::vector<double>& a_factors);

// Full-order Richardson estimator: normalizes a_i = eps_i / min(eps),
// applies the eliminator weights, and propagates variance as
// sum b_i^2 var_i. Requires distinct positive epsilons.
ExtrapolationResult richardson_estimate(const std::vector<NoisePoint>& points);

// Least-squares line value = slope * eps + intercept; the intercept is the
// zero-noise estimate and its regression variance is reported. Weighted by
// 1/variance by default; falls back to an unweighted fit (residual-based
// uncertainty, no shot-noise term) when any variance is missing or zero
// or when use_variance_weights is false.
ExtrapolationResult linear_extrapolate(const std::vector<NoisePoint>& points,
                                       bool use_variance_weights = true);

// linear_extrapolate on the first D points for D = 2..n. Input must be
// ordered by non-decreasing epsilon; output has length n-1.
std::vector<ExtrapolationResult> convergence_series(
    const std::vector<NoisePoint>& points, bool use_variance_weights = true);

// |ideal - estimate|; stores the value on the result and returns it.
double estimator_error(double ideal, ExtrapolationResult& result);

// sum of squared weights; the multiplicative sampling-cost factor.
double variance_amplification(const std::vector<double>& weights);

}  // namespace mitbench
