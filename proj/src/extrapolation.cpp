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

#include "mitbench/extrapolation.hpp"

#include <algorithm>
#include <stdexcept>

namespace mitbench {

std::string ExtrapolationResult::method_tag() const {
  switch (method) {
    case ExtrapolationMethod::richardson:
      return "richardson-" + std::to_string(weights.size());
    case ExtrapolationMethod::linear_lsq:
      return "linear-lsq";
    case ExtrapolationMethod::direct:
      return "direct";
  }
  return "unknown";
}

std::vector<double> richardson_weights(const std::vector<double>& a_factors) {
  const std::size_t n = a_factors.size();
  if (n == 0)
    throw std::domain_error("richardson_weights: need at least one factor");
  for (double a : a_factors) {
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::domain_error("richardson_weights: factors must be positive");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = std::abs(a_factors[i] - a_factors[j]);
      if (gap <= 1e-12 * std::max(a_factors[i], a_factors[j]))
        throw std::domain_error("richardson_weights: factors must be distinct");
    }
  }

  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    double b = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      b *= a_factors[j] / (a_factors[j] - a_factors[i]);
    }
    if (!std::isfinite(b))
      throw std::domain_error("richardson_weights: weight evaluation overflowed");
    weights[i] = b;
  }
  return weights;
}

ExtrapolationResult richardson_estimate(const std::vector<NoisePoint>& points) {
  if (points.empty())
    throw std::domain_error("richardson_estimate: need at least one point");
  double eps_min = points.front().epsilon;
  for (const NoisePoint& p : points) {
    if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
      throw std::domain_error("richardson_estimate: noise factors must be positive");
    if (!(p.variance >= 0.0))
      throw std::domain_error("richardson_estimate: variances must be non-negative");
    eps_min = std::min(eps_min, p.epsilon);
  }

  ExtrapolationResult result;
  result.method = ExtrapolationMethod::richardson;
  result.a_factors.reserve(points.size());
  for (const NoisePoint& p : points)
    result.a_factors.push_back(p.epsilon / eps_min);
  result.weights = richardson_weights(result.a_factors);

  for (std::size_t i = 0; i < points.size(); ++i) {
    result.estimate += result.weights[i] * points[i].value;
    result.variance += result.weights[i] * result.weights[i] * points[i].variance;
    result.sum_b_squared += result.weights[i] * result.weights[i];
  }
  result.shot_weighted = false;
  return result;
}

ExtrapolationResult linear_extrapolate(const std::vector<NoisePoint>& points,
                                       bool use_variance_weights) {
  const std::size_t n = points.size();
  if (n < 2)
    throw std::domain_error("linear_extrapolate: need at least two points");
  double eps_lo = points.front().epsilon, eps_hi = points.front().epsilon;
  bool variances_usable = use_variance_weights;
  for (const NoisePoint& p : points) {
    if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
      throw std::domain_error("linear_extrapolate: noise factors must be positive");
    if (!(p.variance >= 0.0))
      throw std::domain_error("linear_extrapolate: variances must be non-negative");
    if (p.variance <= 0.0) variances_usable = false;
    eps_lo = std::min(eps_lo, p.epsilon);
    eps_hi = std::max(eps_hi, p.epsilon);
  }
  if (eps_hi - eps_lo <= 1e-12 * eps_hi)
    throw std::domain_error("linear_extrapolate: noise factors are rank deficient");

  // Weighted normal equations for value = slope * eps + intercept.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, sy = 0.0, sxy = 0.0;
  for (const NoisePoint& p : points) {
    const double w = variances_usable ? 1.0 / p.variance : 1.0;
    s0 += w;
    s1 += w * p.epsilon;
    s2 += w * p.epsilon * p.epsilon;
    sy += w * p.value;
    sxy += w * p.epsilon * p.value;
  }
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 0.0) || !std::isfinite(det))
    throw std::domain_error("linear_extrapolate: singular normal equations");

  const double intercept = (s2 * sy - s1 * sxy) / det;
  const double slope = (s0 * sxy - s1 * sy) / det;

  double chi2 = 0.0;  // weighted residual sum of squares
  for (const NoisePoint& p : points) {
    const double r = p.value - (slope * p.epsilon + intercept);
    chi2 += (variances_usable ? 1.0 / p.variance : 1.0) * r * r;
  }

  ExtrapolationResult result;
  result.method = ExtrapolationMethod::linear_lsq;
  result.estimate = intercept;
  result.slope = slope;
  result.shot_weighted = variances_usable;
  if (variances_usable) {
    // Shot-noise variance of the intercept; its influence weights
    // h_i = w_i (s2 - s1 eps_i) / det satisfy sum h = 1, sum h eps = 0.
    result.variance = s2 / det;
    if (n > 2) result.reduced_chi2 = chi2 / static_cast<double>(n - 2);
    result.weights.reserve(n);
    double sum_b2 = 0.0;
    for (const NoisePoint& p : points) {
      const double h = (1.0 / p.variance) * (s2 - s1 * p.epsilon) / det;
      result.weights.push_back(h);
      sum_b2 += h * h;
    }
    result.sum_b_squared = sum_b2;
  } else {
    // No shot-noise term to propagate; report the residual-based regression
    // variance of the intercept instead.
    const double sigma2 = n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
    result.variance = sigma2 * s2 / det;
    result.weights.reserve(n);
    double sum_b2 = 0.0;
    for (const NoisePoint& p : points) {
      const double h = (s2 - s1 * p.epsilon) / det;
      result.weights.push_back(h);
      sum_b2 += h * h;
    }
    result.sum_b_squared = sum_b2;
  }
  result.a_factors.reserve(n);
  for (const NoisePoint& p : points)
    result.a_factors.push_back(p.epsilon / eps_lo);
  return result;
}

std::vector<ExtrapolationResult> convergence_series(
    const std::vector<NoisePoint>& points, bool use_variance_weights) {
  if (points.size() < 2)
    throw std::domain_error("convergence_series: need at least two points");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].epsilon < points[i - 1].epsilon)
      throw std::invalid_argument(
          "convergence_series: points must be ordered by noise factor");
  }
  std::vector<ExtrapolationResult> series;
  series.reserve(points.size() - 1);
  for (std::size_t d = 2; d <= points.size(); ++d) {
    std::vector<NoisePoint> head(points.begin(), points.begin() + d);
    series.push_back(linear_extrapolate(head, use_variance_weights));
  }
  return series;
}

double estimator_error(double ideal, ExtrapolationResult& result) {
  result.delta = std::abs(ideal - result.estimate);
  return *result.delta;
}

double variance_amplification(const std::vector<double>& weights) {
  if (weights.empty())
    throw std::domain_error("variance_amplification: empty weight list");
  double sum = 0.0;
  for (double b : weights) sum += b * b;
  return sum;
}

}  // namespace mitbench
