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

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "mitbench/device_model.hpp"
#include "mitbench/extrapolation.hpp"
#include "mitbench/harness.hpp"
#include "mitbench/qubit_sim.hpp"

#include "rational.hpp"

using namespace mitbench;

namespace {

const std::vector<double> kHalfStepGrid = {1.0, 1.5, 2.0, 2.5,
                                        3.0, 3.5, 4.0, 4.5};
const std::vector<double> kHalfStepWeights = {36.0,  -168.0, 378.0, -504.0,
                                           420.0, -216.0, 63.0,  -8.0};

std::vector<NoisePoint> make_points(const std::vector<double>& eps,
                                    const std::vector<double>& val,
                                    double variance = 0.0) {
  std::vector<NoisePoint> p(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i)
    p[i] = {eps[i], val[i], variance};
  return p;
}

}  // namespace

TEST_CASE("richardson_weights handles the no-extrapolation case") {
  CHECK(richardson_weights({1.0}) == std::vector<double>{1.0});
}

TEST_CASE("richardson_weights solves the two-point system") {
  const std::vector<double> b = richardson_weights({1.0, 2.0});
  REQUIRE(b.size() == 2);
  CHECK(b[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("richardson_weights solves the three-point system") {
  const std::vector<double> b = richardson_weights({1.0, 1.5, 2.0});
  REQUIRE(b.size() == 3);
  CHECK(b[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(b[2] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("richardson_weights matches the exact-rational oracle on the full grid") {
  // Same abscissae as doubled half-integers, so the oracle is exact.
  std::vector<testoracle::Rat> a;
  for (int k = 2; k <= 9; ++k) a.emplace_back(k);
  const std::vector<testoracle::Rat> exact = testoracle::exact_weights(a);
  const std::vector<double> b = richardson_weights(kHalfStepGrid);
  REQUIRE(b.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(exact[i] == testoracle::Rat(static_cast<std::int64_t>(kHalfStepWeights[i])));
    CHECK(b[i] == doctest::Approx(kHalfStepWeights[i]).epsilon(1e-9));
  }
  CHECK(testoracle::exact_sum(exact) == testoracle::Rat(1));
  CHECK(testoracle::exact_sum_squares(exact) == testoracle::Rat(653509));
  for (int k = 1; k < 8; ++k)
    CHECK(testoracle::exact_power_sum(exact, a, k) == testoracle::Rat(0));
}

TEST_CASE("richardson_weights rejects degenerate factor sets") {
  CHECK_THROWS_AS(richardson_weights({}), std::domain_error);
  CHECK_THROWS_AS(richardson_weights({1.0, 1.0}), std::domain_error);
  CHECK_THROWS_AS(richardson_weights({1.0, -2.0}), std::domain_error);
}

TEST_CASE("weight constraints hold for random factor sets") {
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> pick(1.0, 5.0);
  std::uniform_int_distribution<int> size(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a;
    const int n = size(rng);
    while (static_cast<int>(a.size()) < n) {
      const double candidate = pick(rng);
      bool close = false;
      // Keep the nodes apart: near-coincident factors blow the weights up
      // to where their own rounding swamps a 1e-9 identity check.
      for (double existing : a)
        if (std::abs(existing - candidate) < 0.05) close = true;
      if (!close) a.push_back(candidate);
    }
    const std::vector<double> b = richardson_weights(a);
    double sum = 0.0;
    for (double w : b) sum += w;
    CHECK(std::abs(sum - 1.0) < 1e-9);
    for (int k = 1; k < n; ++k) {
      double acc = 0.0, scale = 0.0;
      for (int i = 0; i < n; ++i) {
        const double term = b[i] * std::pow(a[i], k);
        acc += term;
        scale = std::max(scale, std::abs(term));
      }
      CHECK(std::abs(acc) < 1e-8 * std::max(scale, 1.0));
    }
  }
}

TEST_CASE("richardson_estimate cancels a linear trend") {
  // y = A + B eps at eps=(0.1, 0.2): estimate is 2 y1 - y2 = A.
  const double A = 1.3, B = -0.7;
  const ExtrapolationResult r = richardson_estimate(
      make_points({0.1, 0.2}, {A + B * 0.1, A + B * 0.2}));
  CHECK(r.a_factors == std::vector<double>{1.0, 2.0});
  CHECK(r.estimate == doctest::Approx(A).epsilon(1e-12));
  CHECK(r.method_tag() == "richardson-2");
}

TEST_CASE("richardson_estimate reproduces the worked quadratic case") {
  // y = 2 - 3 eps + 0.5 eps^2 at eps=(0.1, 0.15, 0.2) -> a=(1, 1.5, 2).
  const ExtrapolationResult r = richardson_estimate(
      make_points({0.1, 0.15, 0.2}, {1.705, 1.56125, 1.42}));
  CHECK(r.weights[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(r.weights[1] == doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(r.weights[2] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.estimate == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("richardson_estimate propagates equal variances through the weights") {
  const double v = 3e-4;
  const ExtrapolationResult r =
      richardson_estimate(make_points({0.1, 0.2}, {1.0, 0.9}, v));
  CHECK(r.sum_b_squared == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(r.variance == doctest::Approx(5.0 * v).epsilon(1e-12));
}

TEST_CASE("richardson_estimate is scale invariant in the noise factors") {
  const std::vector<double> y = {1.0, 0.8, 0.75};
  const ExtrapolationResult a =
      richardson_estimate(make_points({0.1, 0.15, 0.2}, y));
  const ExtrapolationResult b =
      richardson_estimate(make_points({0.3, 0.45, 0.6}, y));
  CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-12));
  CHECK(a.sum_b_squared == doctest::Approx(b.sum_b_squared).epsilon(1e-12));
}

TEST_CASE("polynomial data is recovered exactly at zero noise") {
  // Degree n-1 polynomial through n points: the estimator returns y(0).
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> c(n);
    for (double& x : c) x = coeff(rng);
    std::vector<double> eps(n), val(n);
    for (int i = 0; i < n; ++i) {
      eps[i] = 0.05 * (i + 1);
      double acc = 0.0;
      for (int k = n - 1; k >= 0; --k) acc = acc * eps[i] + c[k];
      val[i] = acc;
    }
    const ExtrapolationResult r = richardson_estimate(make_points(eps, val));
    CHECK(std::abs(r.estimate - c[0]) <=
          1e-9 * std::max(std::abs(c[0]), 1.0));
  }
}

TEST_CASE("richardson_estimate rejects duplicate noise factors") {
  CHECK_THROWS_AS(richardson_estimate(make_points({0.1, 0.1}, {1.0, 0.9})),
                  std::domain_error);
  CHECK_THROWS_AS(richardson_estimate({}), std::domain_error);
}

TEST_CASE("linear_extrapolate recovers an exact line") {
  const std::vector<double> eps = {0.1, 0.2, 0.3, 0.4};
  std::vector<double> val(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) val[i] = 5.0 - 2.0 * eps[i];
  const ExtrapolationResult r = linear_extrapolate(make_points(eps, val));
  CHECK(r.estimate == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(*r.slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(*r.reduced_chi2 < 1e-18);
  CHECK(r.method_tag() == "linear-lsq");
}

TEST_CASE("linear_extrapolate reports constant data at its level") {
  const ExtrapolationResult r = linear_extrapolate(
      make_points({0.2, 0.5, 0.9}, {11.0, 11.0, 11.0}));
  CHECK(r.estimate == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(std::abs(*r.slope) < 1e-12);
}

TEST_CASE("unweighted intercept of quadratic data matches the closed form") {
  // y = 1 - eps + 0.2 eps^2 at eps = 0.1..0.8: hand least squares gives
  // slope -0.82, mean y 0.601, intercept 0.970, bias exactly 0.030.
  std::vector<double> eps(8), val(8);
  for (int i = 0; i < 8; ++i) {
    eps[i] = 0.1 * (i + 1);
    val[i] = 1.0 - eps[i] + 0.2 * eps[i] * eps[i];
  }
  const ExtrapolationResult r =
      linear_extrapolate(make_points(eps, val), /*use_variance_weights=*/false);
  CHECK_FALSE(r.shot_weighted);
  CHECK(r.estimate == doctest::Approx(0.970).epsilon(1e-9));
  CHECK(std::abs(r.estimate - 1.0) <= 0.030 + 1e-9);
  CHECK(*r.slope == doctest::Approx(-0.82).epsilon(1e-9));
}

TEST_CASE("zero variances disable shot weighting") {
  const ExtrapolationResult r = linear_extrapolate(
      make_points({0.1, 0.2, 0.3}, {1.0, 0.9, 0.8}, 0.0));
  CHECK_FALSE(r.shot_weighted);
  const ExtrapolationResult w = linear_extrapolate(
      make_points({0.1, 0.2, 0.3}, {1.0, 0.9, 0.8}, 1e-4));
  CHECK(w.shot_weighted);
}

TEST_CASE("linear_extrapolate rejects rank-deficient noise factors") {
  CHECK_THROWS_AS(
      linear_extrapolate(make_points({0.2, 0.2}, {1.0, 0.9})),
      std::domain_error);
  CHECK_THROWS_AS(linear_extrapolate(make_points({0.2}, {1.0})),
                  std::domain_error);
}

TEST_CASE("two zero-variance points make the line and Richardson agree") {
  const std::vector<NoisePoint> pts = make_points({0.1, 0.25}, {0.9, 0.6});
  const ExtrapolationResult line = linear_extrapolate(pts);
  const ExtrapolationResult rich = richardson_estimate(pts);
  CHECK(line.estimate == doctest::Approx(rich.estimate).epsilon(1e-12));
}

TEST_CASE("convergence_series fits nested prefixes") {
  std::vector<double> eps(6), val(6);
  for (int i = 0; i < 6; ++i) {
    eps[i] = 0.1 * (i + 1);
    val[i] = 5.0 - 2.0 * eps[i];
  }
  const std::vector<ExtrapolationResult> series =
      convergence_series(make_points(eps, val));
  REQUIRE(series.size() == 5);  // D = 2..6
  for (const ExtrapolationResult& r : series)
    CHECK(r.estimate == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("convergence_series standard error settles as data accumulates") {
  // Simulated M=20 block from the default device and grid.
  const DeviceModel model;
  BenchConfig config;
  const std::vector<ExperimentSpec> suite = build_program_suite(
      {20}, config.suite.stretch_factors, 10.0, model, 1024, 77);
  std::vector<NoisePoint> points;
  for (const ExperimentSpec& spec : suite) {
    const MeasurementRecord rec = run_experiment(model, spec);
    const double eps =
        noise_factor(spec.m_cycles, spec.period, model);
    const double scale = model.theta_scale();
    points.push_back({eps, rec.mean_theta,
                      rec.variance_of_mean * scale * scale});
  }
  const std::vector<ExtrapolationResult> series = convergence_series(points);
  REQUIRE(series.size() == 7);
  int non_increasing = 0;
  for (std::size_t i = 1; i < series.size(); ++i)
    if (series[i].standard_error() <= series[i - 1].standard_error())
      ++non_increasing;
  CHECK(non_increasing >= 6);
}

TEST_CASE("an early outlier washes out as the dataset grows") {
  std::vector<double> eps(8), val(8);
  for (int i = 0; i < 8; ++i) {
    eps[i] = 0.1 * (i + 1);
    val[i] = 5.0 - 2.0 * eps[i];
  }
  val[0] += 3.0;  // corrupt the least-noisy point
  const std::vector<ExtrapolationResult> series =
      convergence_series(make_points(eps, val));
  ExtrapolationResult first = series.front();
  ExtrapolationResult last = series.back();
  estimator_error(5.0, first);
  estimator_error(5.0, last);
  CHECK(*first.delta > *last.delta);
}

TEST_CASE("estimator_error is the absolute difference") {
  ExtrapolationResult r;
  r.estimate = 2.0;
  CHECK(estimator_error(2.0, r) == 0.0);
  CHECK(*r.delta == 0.0);
  r.estimate = 36.0;
  CHECK(estimator_error(40.0, r) == 4.0);
  CHECK(*r.delta == 4.0);
}

TEST_CASE("estimator error vanishes against the polynomial oracle") {
  // Quadratic synthetic data: the 3-point estimator must land on y(0).
  const double ideal = 2.0;
  ExtrapolationResult r = richardson_estimate(
      make_points({0.1, 0.15, 0.2}, {1.705, 1.56125, 1.42}));
  CHECK(estimator_error(ideal, r) <= 1e-9);
}

TEST_CASE("variance_amplification sums squared weights") {
  CHECK(variance_amplification({1.0}) == 1.0);
  CHECK(variance_amplification({6.0, -8.0, 3.0}) == doctest::Approx(109.0));
  CHECK(variance_amplification(kHalfStepWeights) ==
        doctest::Approx(653509.0).epsilon(1e-12));
  CHECK_THROWS_AS(variance_amplification({}), std::domain_error);
}

TEST_CASE("empirical estimator variance matches the propagated one") {
  // Resample binomial shot noise around a fixed linear trend and compare
  // the spread of the Richardson estimate with sum b_i^2 var_i.
  const std::vector<double> eps = {0.1, 0.15, 0.2};
  const int shots = 1024;
  std::vector<double> p_true(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) p_true[i] = 0.9 - 0.8 * eps[i];

  std::vector<double> truth_var(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i)
    truth_var[i] = p_true[i] * (1.0 - p_true[i]) / shots;
  std::vector<NoisePoint> center(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i)
    center[i] = {eps[i], p_true[i], truth_var[i]};
  const double predicted = richardson_estimate(center).variance;

  std::mt19937_64 rng(424243);
  double sum = 0.0, sum_sq = 0.0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    std::vector<NoisePoint> draw(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
      std::binomial_distribution<int> bin(shots, p_true[i]);
      const double p_hat = static_cast<double>(bin(rng)) / shots;
      draw[i] = {eps[i], p_hat, truth_var[i]};
    }
    const double est = richardson_estimate(draw).estimate;
    sum += est;
    sum_sq += est * est;
  }
  const double mean = sum / trials;
  const double empirical = (sum_sq - trials * mean * mean) / (trials - 1);
  CHECK(std::abs(empirical - predicted) < 0.20 * predicted);
}
