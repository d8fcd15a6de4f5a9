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

#include "mitbench/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mitbench/experiment.hpp"
#include "mitbench/qubit_sim.hpp"

namespace mitbench {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kRelTol = 1e-10;

// Seed-stream stages used by the simulated calibration experiments.
constexpr std::uint64_t kStageT1 = 1;
constexpr std::uint64_t kStageTrace = 2;
constexpr std::uint64_t kStageEnvelope = 3;
constexpr std::uint64_t kStageRefine = 4;

std::uint64_t stage_salt(std::uint64_t stage, std::uint64_t series,
                         std::uint64_t attempt, std::uint64_t point) {
  return (stage << 48) | (series << 32) | (attempt << 16) | point;
}

std::string format_value(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Solves the n x n system a x = b in place (partial pivoting); the solution
// lands in b. Returns false when a pivot collapses.
bool solve_dense(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
    if (!(std::abs(a[pivot * n + col]) > 0.0)) return false;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (int row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] * inv;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[row * n + c] -= f * a[col * n + c];
      b[row] -= f * b[col];
    }
  }
  for (int row = n - 1; row >= 0; --row) {
    double acc = b[row];
    for (int c = row + 1; c < n; ++c) acc -= a[row * n + c] * b[c];
    b[row] = acc / a[row * n + row];
  }
  return true;
}

struct GnOutcome {
  std::vector<double> params;
  std::vector<double> std_errors;
  double rss = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string note;
};

// Damped Gauss-Newton on residuals r = y - model(params). `eval` fills the
// residual vector and the row-major n x p Jacobian of the model.
template <typename Eval>
GnOutcome gauss_newton(std::vector<double> params, std::size_t n_data,
                       Eval&& eval) {
  const std::size_t p = params.size();
  GnOutcome out;
  std::vector<double> resid(n_data), jac(n_data * p);
  std::vector<double> trial(p), trial_resid(n_data), trial_jac(n_data * p);

  auto sum_sq = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  };

  eval(params, resid, jac);
  double rss = sum_sq(resid);

  int iter = 0;
  for (; iter < kMaxIterations; ++iter) {
    std::vector<double> ata(p * p, 0.0), atb(p, 0.0);
    for (std::size_t i = 0; i < n_data; ++i) {
      for (std::size_t a = 0; a < p; ++a) {
        const double ja = jac[i * p + a];
        atb[a] += ja * resid[i];
        for (std::size_t b = a; b < p; ++b) ata[a * p + b] += ja * jac[i * p + b];
      }
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < a; ++b) ata[a * p + b] = ata[b * p + a];

    std::vector<double> lhs = ata;
    std::vector<double> delta = atb;
    if (!solve_dense(lhs, delta, static_cast<int>(p))) {
      out.note = "singular normal equations";
      break;
    }

    double scale = 1.0;
    bool improved = false;
    double trial_rss = rss;
    for (int halve = 0; halve < 25; ++halve) {
      for (std::size_t a = 0; a < p; ++a) trial[a] = params[a] + scale * delta[a];
      eval(trial, trial_resid, trial_jac);
      trial_rss = sum_sq(trial_resid);
      if (std::isfinite(trial_rss) && trial_rss <= rss) {
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      // No descent direction left; converged if the full step was tiny.
      double rel = 0.0;
      for (std::size_t a = 0; a < p; ++a)
        rel = std::max(rel, std::abs(delta[a]) / (std::abs(params[a]) + 1e-12));
      out.converged = rel < 1e-6;
      if (!out.converged) out.note = "line search stalled";
      break;
    }

    double rel = 0.0;
    for (std::size_t a = 0; a < p; ++a)
      rel = std::max(rel, std::abs(scale * delta[a]) / (std::abs(params[a]) + 1e-12));
    params = trial;
    resid = trial_resid;
    jac = trial_jac;
    rss = trial_rss;
    if (rel < kRelTol) {
      out.converged = true;
      ++iter;
      break;
    }
  }
  if (iter >= kMaxIterations && !out.converged) out.note = "iteration cap reached";

  out.params = params;
  out.rss = rss;
  out.iterations = iter;

  // Standard errors from s^2 (J^T J)^{-1} at the solution.
  out.std_errors.assign(p, 0.0);
  if (n_data > p) {
    const double s2 = rss / static_cast<double>(n_data - p);
    std::vector<double> ata(p * p, 0.0);
    for (std::size_t i = 0; i < n_data; ++i)
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
          ata[a * p + b] += jac[i * p + a] * jac[i * p + b];
    for (std::size_t k = 0; k < p; ++k) {
      std::vector<double> lhs = ata;
      std::vector<double> rhs(p, 0.0);
      rhs[k] = 1.0;
      if (solve_dense(lhs, rhs, static_cast<int>(p)))
        out.std_errors[k] = std::sqrt(std::max(0.0, s2 * rhs[k]));
    }
  }
  return out;
}

FitResult from_outcome(const GnOutcome& gn, std::size_t n_data, std::size_t p) {
  FitResult fit;
  fit.params = gn.params;
  fit.std_errors = gn.std_errors;
  fit.rss = gn.rss;
  fit.reduced_chi2 = n_data > p ? gn.rss / static_cast<double>(n_data - p) : 0.0;
  fit.converged = gn.converged;
  fit.iterations = gn.iterations;
  fit.note = gn.note;
  return fit;
}

// Plain OLS of y on x. Returns {intercept, slope} with standard errors.
// Throws std::domain_error when x has no spread.
struct OlsLine {
  double intercept = 0.0, slope = 0.0;
  double se_intercept = 0.0, se_slope = 0.0;
  double rss = 0.0;
};

OlsLine ols_line(const std::vector<double>& x, const std::vector<double>& y,
                 const char* who) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    throw std::domain_error(std::string(who) + ": rank deficient, need distinct abscissae");
  OlsLine line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (line.intercept + line.slope * x[i]);
    line.rss += r * r;
  }
  if (n > 2) {
    const double s2 = line.rss / static_cast<double>(n - 2);
    line.se_slope = std::sqrt(s2 / sxx);
    line.se_intercept = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return line;
}

}  // namespace

FitResult fit_sinusoid(const std::vector<double>& times,
                       const std::vector<double>& values) {
  if (times.size() != values.size())
    throw std::invalid_argument("fit_sinusoid: size mismatch");
  const std::size_t n = times.size();
  if (n < 8) throw std::domain_error("fit_sinusoid: need at least 8 points");

  const auto [lo_it, hi_it] = std::minmax_element(times.begin(), times.end());
  const double span = *hi_it - *lo_it;
  if (!(span > 0.0)) throw std::domain_error("fit_sinusoid: zero time span");

  double mean = 0.0;
  for (double y : values) mean += y;
  mean /= n;

  // Periodogram over the doubled angle: sin^2 data oscillate at 2/period.
  const double f_min = 0.5 / span;
  const double f_max = 0.5 * static_cast<double>(n) / span;
  const int grid = static_cast<int>(16 * n);
  double best_f = f_min, best_power = -1.0;
  for (int k = 0; k <= grid; ++k) {
    const double f = f_min + (f_max - f_min) * k / grid;
    double cr = 0.0, ci = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = 2.0 * std::numbers::pi * f * times[i];
      cr += (values[i] - mean) * std::cos(arg);
      ci += (values[i] - mean) * std::sin(arg);
    }
    const double power = cr * cr + ci * ci;
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  const double period0 = 2.0 / best_f;

  // Linear solve for offset and quadrature amplitudes at the fixed period:
  // y = c0 + P cos(4 pi t / period) + Q sin(4 pi t / period).
  std::vector<double> ata(9, 0.0), atb(3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double arg = 4.0 * std::numbers::pi * times[i] / period0;
    const double reg[3] = {1.0, std::cos(arg), std::sin(arg)};
    for (int a = 0; a < 3; ++a) {
      atb[a] += reg[a] * values[i];
      for (int b = 0; b < 3; ++b) ata[a * 3 + b] += reg[a] * reg[b];
    }
  }
  double offset0 = mean, amp0 = 0.0, phase0 = 0.0;
  if (solve_dense(ata, atb, 3)) {
    const double c0 = atb[0], qp = atb[1], qq = atb[2];
    amp0 = 2.0 * std::hypot(qp, qq);
    offset0 = c0 - 0.5 * amp0;
    phase0 = 0.5 * std::atan2(qq, -qp);
  }

  auto eval = [&](const std::vector<double>& q, std::vector<double>& r,
                  std::vector<double>& jac) {
    const double offset = q[0], amp = q[1], period = q[2], phase = q[3];
    for (std::size_t i = 0; i < n; ++i) {
      const double u = 2.0 * std::numbers::pi * times[i] / period + phase;
      const double s = std::sin(u);
      const double model = offset + amp * s * s;
      r[i] = values[i] - model;
      jac[i * 4 + 0] = 1.0;
      jac[i * 4 + 1] = s * s;
      jac[i * 4 + 2] =
          -amp * std::sin(2.0 * u) * 2.0 * std::numbers::pi * times[i] / (period * period);
      jac[i * 4 + 3] = amp * std::sin(2.0 * u);
    }
  };

  GnOutcome gn = gauss_newton({offset0, amp0, period0, phase0}, n, eval);
  FitResult fit = from_outcome(gn, n, 4);

  // Canonical form: positive period and amplitude, phase in [0, pi).
  double& offset = fit.params[0];
  double& amp = fit.params[1];
  double& period = fit.params[2];
  double& phase = fit.params[3];
  if (period < 0.0) {
    period = -period;
    phase = -phase;
  }
  if (amp < 0.0) {
    offset += amp;
    amp = -amp;
    phase += 0.5 * std::numbers::pi;
  }
  phase = std::fmod(phase, std::numbers::pi);
  if (phase < 0.0) phase += std::numbers::pi;

  if (!(period > 0.0) || !std::isfinite(period)) {
    fit.converged = false;
    fit.note = "degenerate period";
    return fit;
  }
  if (fit.converged && span < 1.5 * period) {
    fit.converged = false;
    fit.note = "data span below 1.5 fitted periods";
  }
  const double amp_floor = fit.std_errors.size() > 1 ? 2.0 * fit.std_errors[1] : 0.0;
  if (fit.converged && amp <= std::max(amp_floor, 1e-12)) {
    fit.converged = false;
    fit.note = "amplitude consistent with zero";
  }
  return fit;
}

FitResult fit_power_law(const std::vector<double>& amplitudes,
                        const std::vector<double>& periods) {
  if (amplitudes.size() != periods.size())
    throw std::invalid_argument("fit_power_law: size mismatch");
  const std::size_t n = amplitudes.size();
  if (n < 3) throw std::domain_error("fit_power_law: need at least 3 points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(amplitudes[i] > 0.0) || !(periods[i] > 0.0))
      throw std::domain_error("fit_power_law: coordinates must be positive");
    lx[i] = std::log(amplitudes[i]);
    ly[i] = std::log(periods[i]);
  }
  const OlsLine line = ols_line(lx, ly, "fit_power_law");

  FitResult fit;
  const double a = std::exp(line.intercept);
  fit.params = {a, line.slope};
  fit.std_errors = {a * line.se_intercept, line.se_slope};
  fit.rss = line.rss;  // in log coordinates
  fit.reduced_chi2 = n > 2 ? line.rss / static_cast<double>(n - 2) : 0.0;
  fit.converged = true;
  fit.iterations = 0;
  return fit;
}

FitResult fit_exponential_decay(const std::vector<double>& times,
                                const std::vector<double>& values) {
  if (times.size() != values.size())
    throw std::invalid_argument("fit_exponential_decay: size mismatch");
  const std::size_t n = times.size();
  if (n < 3) throw std::domain_error("fit_exponential_decay: need at least 3 points");
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(values[i] > 0.0))
      throw std::domain_error("fit_exponential_decay: values must be positive");
    ly[i] = std::log(values[i]);
  }

  // Log-linear initialization, then Gauss-Newton on the raw values.
  const OlsLine line = ols_line(times, ly, "fit_exponential_decay");
  const double a0 = std::exp(line.intercept);
  const double r0 = -line.slope;

  auto eval = [&](const std::vector<double>& q, std::vector<double>& r,
                  std::vector<double>& jac) {
    const double a = q[0], rate = q[1];
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(-rate * times[i]);
      r[i] = values[i] - a * e;
      jac[i * 2 + 0] = e;
      jac[i * 2 + 1] = -a * times[i] * e;
    }
  };
  GnOutcome gn = gauss_newton({a0, r0}, n, eval);
  return from_outcome(gn, n, 2);
}

FitResult measure_t1(const std::vector<double>& times,
                     const std::vector<double>& p1_values) {
  FitResult decay = fit_exponential_decay(times, p1_values);

  FitResult fit;
  fit.rss = decay.rss;
  fit.reduced_chi2 = decay.reduced_chi2;
  fit.converged = decay.converged;
  fit.iterations = decay.iterations;
  fit.note = decay.note;
  const double rate = decay.params[1];
  if (rate <= 0.0 || !std::isfinite(1.0 / rate)) {
    fit.params = {std::numeric_limits<double>::infinity()};
    fit.std_errors = {0.0};
    fit.note = "no measurable decay";
  } else {
    fit.params = {1.0 / rate};
    fit.std_errors = {decay.std_errors[1] / (rate * rate)};
  }
  return fit;
}

FitResult measure_t1(const DeviceModel& truth, const T1Protocol& protocol,
                     std::uint64_t seed) {
  truth.validate();
  if (protocol.points < 3)
    throw std::domain_error("measure_t1: protocol needs at least 3 points");
  if (protocol.shots < 1) throw std::domain_error("measure_t1: shots must be >= 1");
  if (!(protocol.initial_window > 0.0) ||
      !(protocol.max_time >= protocol.initial_window))
    throw std::domain_error("measure_t1: bad protocol window");

  // Aim for a tail that has clearly decayed; the window doubles until the
  // last sampled mean falls under this mark or the cap is reached.
  constexpr double kDecayedMark = 0.35;

  double window = protocol.initial_window;
  std::vector<double> times(protocol.points), means(protocol.points);
  for (std::uint64_t attempt = 0;; ++attempt) {
    for (int k = 0; k < protocol.points; ++k)
      times[k] = window * static_cast<double>(k + 1) / protocol.points;
    DriveSpec drive{0.0, 0.0, window, 1.0};
    const EvolveResult evo =
        evolve(truth, drive, BlochState::excited(), times);
    for (int k = 0; k < protocol.points; ++k) {
      const double p1 =
          std::clamp(evo.samples[k].state.excited_population(), 0.0, 1.0);
      means[k] = sample_shots(p1, protocol.shots,
                              mix_seed(seed, stage_salt(kStageT1, 0, attempt, k)),
                              truth)
                     .mean_p1;
    }
    if (means.back() <= kDecayedMark || window * 2.0 > protocol.max_time) break;
    window *= 2.0;
  }

  // Shot-sampled zeros carry no information on a log scale; drop them.
  std::vector<double> ft, fy;
  for (int k = 0; k < protocol.points; ++k) {
    if (means[k] > 0.0) {
      ft.push_back(times[k]);
      fy.push_back(means[k]);
    }
  }
  if (ft.size() < 3) {
    FitResult fit;
    fit.converged = false;
    fit.note = "relaxation data degenerate: fewer than 3 positive means";
    fit.params = {0.0};
    fit.std_errors = {0.0};
    return fit;
  }
  return measure_t1(ft, fy);
}

FitResult extract_amplitude_noise(
    const std::vector<std::pair<double, double>>& rates, double t1) {
  if (rates.size() < 2)
    throw std::domain_error("extract_amplitude_noise: need at least 2 amplitudes");
  if (!(t1 > 0.0))
    throw std::domain_error("extract_amplitude_noise: t1 must be positive");
  std::vector<double> x, y;
  x.reserve(rates.size());
  y.reserve(rates.size());
  const double bare = 1.0 / t1;  // 0 when t1 is infinite
  for (const auto& [amplitude, rate] : rates) {
    x.push_back(amplitude);
    y.push_back(rate - bare);
  }
  const OlsLine line = ols_line(x, y, "extract_amplitude_noise");

  FitResult fit;
  fit.params = {line.intercept, line.slope};
  fit.std_errors = {line.se_intercept, line.se_slope};
  fit.rss = line.rss;
  fit.reduced_chi2 =
      rates.size() > 2 ? line.rss / static_cast<double>(rates.size() - 2) : 0.0;
  fit.converged = true;
  return fit;
}

namespace {

struct Batch {
  std::vector<double> times;
  std::vector<double> means;
};

// One simulated sweep: evolve once, shot-sample every requested time.
Batch measure_batch(const DeviceModel& truth, double amplitude,
                    const std::vector<double>& times, int shots,
                    std::uint64_t seed, std::uint64_t stage,
                    std::uint64_t series, std::uint64_t attempt) {
  DriveSpec drive{amplitude, truth.detuning, times.back(), 1.0};
  const EvolveResult evo = evolve(truth, drive, BlochState::ground(), times);
  Batch batch;
  batch.times = times;
  batch.means.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double p1 =
        std::clamp(evo.samples[k].state.excited_population(), 0.0, 1.0);
    batch.means[k] =
        sample_shots(p1, shots,
                     mix_seed(seed, stage_salt(stage, series, attempt, k)), truth)
            .mean_p1;
  }
  return batch;
}

double head_mean(const std::vector<double>& v, std::size_t count) {
  count = std::min(count, v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < count; ++i) s += v[i];
  return s / static_cast<double>(count);
}

double tail_mean(const std::vector<double>& v, std::size_t count) {
  count = std::min(count, v.size());
  double s = 0.0;
  for (std::size_t i = v.size() - count; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(count);
}

}  // namespace

CalibrationResult calibrate_device(const DeviceModel& truth,
                                   const CalibrationConfig& config,
                                   std::uint64_t seed) {
  truth.validate();
  if (config.scan_amplitudes.size() < 3)
    throw std::domain_error("calibrate_device: need at least 3 scan amplitudes");
  for (double g : config.scan_amplitudes)
    if (!(g > 0.0))
      throw std::domain_error("calibrate_device: scan amplitudes must be positive");
  if (config.trace_points < 8)
    throw std::domain_error("calibrate_device: trace_points must be >= 8");
  if (config.trace_cycles < 2)
    throw std::domain_error("calibrate_device: trace_cycles must be >= 2");
  if (config.shots < 1)
    throw std::domain_error("calibrate_device: shots must be >= 1");
  if (config.refine_cycles < 0 ||
      (config.refine_cycles > 0 && config.refine_points < 8))
    throw std::domain_error("calibrate_device: bad refinement settings");
  if (config.envelope_points < 8)
    throw std::domain_error("calibrate_device: envelope_points must be >= 8");

  CalibrationResult out;

  out.t1_fit = measure_t1(truth, config.t1, mix_seed(seed, stage_salt(kStageT1, 0, 0, 0xffff)));
  if (!out.t1_fit.converged)
    out.notes.push_back("t1 fit did not converge: " + out.t1_fit.note);
  const double t1_hat = out.t1_fit.params[0];

  std::vector<double> scan_g, scan_tau;
  for (std::size_t j = 0; j < config.scan_amplitudes.size(); ++j) {
    const double g = config.scan_amplitudes[j];

    // Rabi trace for the period fit. The window is sized from the nominal
    // inverse law (one cycle = 2 pi / amplitude) and grown when the fit
    // reports too short a span; the period estimate itself is data-driven.
    const double nominal_cycle = 2.0 * std::numbers::pi / g;
    FitResult period_fit;
    std::vector<double> trace_times(config.trace_points);
    for (std::uint64_t attempt = 0; attempt < 4; ++attempt) {
      const double window =
          config.trace_cycles * nominal_cycle * static_cast<double>(1ull << attempt);
      for (int k = 0; k < config.trace_points; ++k)
        trace_times[k] = window * static_cast<double>(k + 1) / config.trace_points;
      const Batch trace = measure_batch(truth, g, trace_times, config.shots,
                                        seed, kStageTrace, j, attempt);
      period_fit = fit_sinusoid(trace.times, trace.means);
      if (period_fit.converged) break;
    }
    out.period_fits.push_back(period_fit);
    if (!period_fit.converged) {
      out.notes.push_back("period fit failed at amplitude " + format_value(g) +
                          ": " + period_fit.note);
      out.envelope_fits.push_back(FitResult{{}, {}, 0.0, 0.0, false, 0,
                                            "skipped: no period estimate"});
      continue;
    }
    double tau_hat = period_fit.params[2];

    // The envelope peak grid is extrapolated hundreds of periods out, so the
    // short trace's period error would dephase the far peaks and read as
    // extra decay. A longer interrogation window shrinks the relative error
    // by the span ratio.
    if (config.refine_cycles > 0) {
      const double window = config.refine_cycles * tau_hat;
      std::vector<double> refine_times(config.refine_points);
      for (int k = 0; k < config.refine_points; ++k)
        refine_times[k] =
            window * static_cast<double>(k + 1) / config.refine_points;
      const Batch refine = measure_batch(truth, g, refine_times, config.shots,
                                         seed, kStageRefine, j, 0);
      FitResult refined = fit_sinusoid(refine.times, refine.means);
      if (refined.converged) {
        period_fit = refined;
        tau_hat = refined.params[2];
      } else {
        out.notes.push_back("period refinement failed at amplitude " +
                            format_value(g) + "; keeping the short-trace fit");
      }
    }
    out.period_fits.back() = period_fit;
    scan_g.push_back(g);
    scan_tau.push_back(tau_hat);

    // Phase-coherence horizon: at relative period error s, a peak at t sits
    // 4 pi (t / tau) s radians off the true peak. Cap the window so the last
    // peak stays within half a radian.
    double window_cap = config.envelope_max_window;
    const double sigma_rel = period_fit.std_errors[2] / tau_hat;
    if (sigma_rel > 0.0) {
      constexpr double kPhaseBudget = 0.5;
      window_cap = std::min(window_cap, kPhaseBudget * tau_hat /
                                            (4.0 * std::numbers::pi * sigma_rel));
    }

    // Decay envelope sampled at the population peaks (2k+1) tau/4. The peak
    // stride doubles until the tail has decayed relative to the head, so
    // slow and fast devices both yield a usable window.
    std::vector<double> peak_times(config.envelope_points);
    Batch envelope;
    for (std::uint64_t stride = 1, attempt = 0;; stride *= 2, ++attempt) {
      for (int k = 0; k < config.envelope_points; ++k)
        peak_times[k] =
            (2.0 * static_cast<double>(stride) * k + 1.0) * tau_hat / 4.0;
      envelope = measure_batch(truth, g, peak_times, config.shots, seed,
                               kStageEnvelope, j, attempt);
      for (double& m : envelope.means) m -= 0.5;  // deviation from mid-scale
      const double head = head_mean(envelope.means, 4);
      const double tail = tail_mean(envelope.means, 4);
      if (head <= config.envelope_floor) break;  // no usable signal
      if (tail <= config.envelope_tail_ratio * head) break;
      const double next_window =
          (4.0 * static_cast<double>(stride) * (config.envelope_points - 1) + 1.0) *
          tau_hat / 4.0;
      if (next_window > window_cap) break;
    }

    std::vector<double> kept_t, kept_e;
    for (std::size_t k = 0; k < envelope.means.size(); ++k) {
      if (envelope.means[k] >= config.envelope_floor) {
        kept_t.push_back(envelope.times[k]);
        kept_e.push_back(envelope.means[k]);
      }
    }
    if (kept_t.size() < 8) {
      out.notes.push_back("envelope degenerate at amplitude " + format_value(g));
      out.envelope_fits.push_back(FitResult{{}, {}, 0.0, 0.0, false, 0,
                                            "skipped: envelope below floor"});
      continue;
    }
    FitResult envelope_fit = fit_exponential_decay(kept_t, kept_e);
    out.envelope_fits.push_back(envelope_fit);
    if (!envelope_fit.converged) {
      out.notes.push_back("envelope fit failed at amplitude " + format_value(g) +
                          ": " + envelope_fit.note);
      continue;
    }
    out.rates.emplace_back(g, envelope_fit.params[1] / kDrivenEnvelopeRateRatio);
  }

  if (scan_g.size() < 3)
    throw std::runtime_error(
        "calibrate_device: fewer than 3 period fits converged");
  out.power_law = fit_power_law(scan_g, scan_tau);

  if (out.rates.size() < 2)
    throw std::runtime_error(
        "calibrate_device: fewer than 2 envelope rates available");
  out.amplitude_noise = extract_amplitude_noise(out.rates, t1_hat);

  DeviceModel model;
  model.t1 = t1_hat;
  model.power_a = out.power_law.params[0];
  model.power_b = out.power_law.params[1];
  model.kappa0 = std::max(0.0, out.amplitude_noise.params[0]);
  model.kappa1 = std::max(0.0, out.amplitude_noise.params[1]);
  model.detuning = 0.0;  // resonant drive assumed; not separately calibrated
  model.theta0 = truth.theta0;  // readout map and tick length are taken as
  model.theta1 = truth.theta1;  // given; readout calibration is out of scope
  model.dt_seconds = truth.dt_seconds;
  if (out.amplitude_noise.params[0] < 0.0)
    out.notes.push_back("kappa0 clamped to zero (raw " +
                        format_value(out.amplitude_noise.params[0]) + ")");
  if (out.amplitude_noise.params[1] < 0.0)
    out.notes.push_back("kappa1 clamped to zero (raw " +
                        format_value(out.amplitude_noise.params[1]) + ")");
  try {
    model.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("calibrate_device: fitted model invalid: ") +
                             e.what());
  }
  out.model = model;
  return out;
}

namespace {

nlohmann::json number_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

double null_to_inf(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const FitResult& fit) {
  nlohmann::json params = nlohmann::json::array();
  for (double p : fit.params) params.push_back(number_or_null(p));
  nlohmann::json errors = nlohmann::json::array();
  for (double e : fit.std_errors) errors.push_back(number_or_null(e));
  j = nlohmann::json{
      {"params", std::move(params)},
      {"std_errors", std::move(errors)},
      {"rss", fit.rss},
      {"reduced_chi2", fit.reduced_chi2},
      {"converged", fit.converged},
      {"iterations", fit.iterations},
      {"note", fit.note},
  };
}

void from_json(const nlohmann::json& j, FitResult& fit) {
  fit = FitResult{};
  for (const auto& p : j.at("params")) fit.params.push_back(null_to_inf(p));
  for (const auto& e : j.at("std_errors")) fit.std_errors.push_back(null_to_inf(e));
  fit.rss = j.at("rss").get<double>();
  fit.reduced_chi2 = j.at("reduced_chi2").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  fit.note = j.at("note").get<std::string>();
}

void to_json(nlohmann::json& j, const CalibrationConfig& config) {
  j = nlohmann::json{
      {"scan_amplitudes", config.scan_amplitudes},
      {"trace_points", config.trace_points},
      {"trace_cycles", config.trace_cycles},
      {"shots", config.shots},
      {"t1",
       {{"points", config.t1.points},
        {"shots", config.t1.shots},
        {"max_time", config.t1.max_time},
        {"initial_window", config.t1.initial_window}}},
      {"refine_cycles", config.refine_cycles},
      {"refine_points", config.refine_points},
      {"envelope_points", config.envelope_points},
      {"envelope_max_window", config.envelope_max_window},
      {"envelope_floor", config.envelope_floor},
      {"envelope_tail_ratio", config.envelope_tail_ratio},
  };
}

void to_json(nlohmann::json& j, const CalibrationResult& result) {
  nlohmann::json rates = nlohmann::json::array();
  for (const auto& [amplitude, rate] : result.rates)
    rates.push_back({{"amplitude", amplitude}, {"total_rate", rate}});
  j = nlohmann::json{
      {"version", 1},
      {"model", result.model},
      {"power_law", result.power_law},
      {"t1", result.t1_fit},
      {"amplitude_noise", result.amplitude_noise},
      {"period_fits", result.period_fits},
      {"envelope_fits", result.envelope_fits},
      {"rates", std::move(rates)},
      {"notes", result.notes},
  };
}

void from_json(const nlohmann::json& j, CalibrationConfig& config) {
  config = CalibrationConfig{};
  if (auto it = j.find("scan_amplitudes"); it != j.end())
    config.scan_amplitudes = it->get<std::vector<double>>();
  if (auto it = j.find("trace_points"); it != j.end())
    config.trace_points = it->get<int>();
  if (auto it = j.find("trace_cycles"); it != j.end())
    config.trace_cycles = it->get<int>();
  if (auto it = j.find("shots"); it != j.end()) config.shots = it->get<int>();
  if (auto it = j.find("t1"); it != j.end()) {
    if (auto f = it->find("points"); f != it->end()) config.t1.points = f->get<int>();
    if (auto f = it->find("shots"); f != it->end()) config.t1.shots = f->get<int>();
    if (auto f = it->find("max_time"); f != it->end())
      config.t1.max_time = f->get<double>();
    if (auto f = it->find("initial_window"); f != it->end())
      config.t1.initial_window = f->get<double>();
  }
  if (auto it = j.find("refine_cycles"); it != j.end())
    config.refine_cycles = it->get<int>();
  if (auto it = j.find("refine_points"); it != j.end())
    config.refine_points = it->get<int>();
  if (auto it = j.find("envelope_points"); it != j.end())
    config.envelope_points = it->get<int>();
  if (auto it = j.find("envelope_max_window"); it != j.end())
    config.envelope_max_window = it->get<double>();
  if (auto it = j.find("envelope_floor"); it != j.end())
    config.envelope_floor = it->get<double>();
  if (auto it = j.find("envelope_tail_ratio"); it != j.end())
    config.envelope_tail_ratio = it->get<double>();
}

}  // namespace mitbench
