// Copyright 2026 The psde Authors.
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
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psde/model.hpp"
#include "psde/rng.hpp"
#include "psde/simulate.hpp"

namespace psde {

struct MeasureMeta {
  double s = 0.0;
  Vec x0;
  double t = 0.0;
  std::string model;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// Weighted sample cloud; weights sum to one.
struct EmpiricalMeasure {
  std::vector<Vec> samples;
  std::vector<double> weights;
  MeasureMeta meta;

  static EmpiricalMeasure uniform(std::vector<Vec> samples, MeasureMeta meta = {});
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().size()); }
  std::size_t size() const { return samples.size(); }
  Vec mean() const;
  /// Weighted covariance (divides by 1 - sum w^2, unbiased for uniform weights).
  Mat covariance() const;
  /// Throws InvalidArgument unless weights are non-negative and sum to 1
  /// within 1e-12 and all samples are finite.
  void validate() const;
};

/// Raised when more than 1% of the paths blow up; carries the finite part.
class LawEstimateError : public NumericalError {
 public:
  LawEstimateError(const std::string& what, EmpiricalMeasure partial)
      : NumericalError(what), partial_cloud(std::move(partial)) {}
  EmpiricalMeasure partial_cloud;
};

/// Terminal cloud at t of n_paths paths started at (s, x0); path i uses
/// RngStream(master_seed, i) as in simulate_ensemble.
EmpiricalMeasure estimate_law(const ModelSpec& spec, const Vec& x0, double s, double t, std::size_t n_paths,
                              const StepConfig& cfg, std::uint64_t master_seed);

enum class LawMetric { sliced_wasserstein1, energy };
const char* to_string(LawMetric metric);
LawMetric parse_law_metric(const std::string& name);

struct LawDistanceOptions {
  std::size_t n_projections = 64;
  std::size_t bootstrap = 200;
  /// Energy distance uses at most this many evenly spaced points per cloud.
  std::size_t energy_max_points = 1000;
};

struct LawDistanceReport {
  LawMetric metric = LawMetric::sliced_wasserstein1;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_projections = 0;
};

/// Exact 1-d Wasserstein-1 distance between weighted samples (integral of
/// |F - G|).
double wasserstein1_1d(const std::vector<double>& a, const std::vector<double>& wa,
                       const std::vector<double>& b, const std::vector<double>& wb);

/// Sliced W1 averages wasserstein1_1d over random unit directions drawn from
/// rng; energy is 2 E|X - Y| - E|X - X'| - E|Y - Y'| (V-statistic). The
/// bootstrap standard error resamples both clouds, keeping the directions.
LawDistanceReport law_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, LawMetric metric,
                               RngStream& rng, const LawDistanceOptions& options = {});

struct LawPeriodicityReport {
  std::vector<double> times;             // s + k theta, k = 0..k_max
  std::vector<LawDistanceReport> d;      // k = 0..k_max-1
  std::vector<LawDistanceReport> null;   // same-time half-ensemble distance at s + (k+1) theta
  std::vector<bool> in_band;
  /// First k with d_k in the null band, and first k from which every later
  /// d_k stays in the band (k_max when none).
  std::size_t first_in_band = 0;
  std::size_t settled_from = 0;
  /// Longest run of consecutive in-band indices.
  std::size_t longest_run = 0;
  std::size_t blowups = 0;
};

struct PeriodicityOptions {
  LawMetric metric = LawMetric::sliced_wasserstein1;
  LawDistanceOptions distance;
  /// In band iff d_k <= null_k + band_sigmas * sqrt(se_d^2 + se_null^2).
  double band_sigmas = 3.0;
};

/// One ensemble of continuing paths split into halves A and B; d_k compares
/// A at s + k theta with B at s + (k+1) theta, and null_k compares A with B at
/// s + (k+1) theta, so both distances carry the same sampling noise. Both use
/// the same projection directions.
LawPeriodicityReport periodicity_test(const ModelSpec& spec, const Vec& x0, double s, std::size_t k_max,
                                    std::size_t n_paths, const StepConfig& cfg, std::uint64_t master_seed,
                                    const PeriodicityOptions& options = {});

struct CesaroReport {
  std::vector<double> times;      // s + j theta
  std::vector<double> period_mean;   // estimate of P_{s,s+j theta} phi(x0)
  std::vector<double> period_stderr;
  std::vector<double> average;    // A_j
  std::vector<double> std_error;     // of A_j, from per-path running averages
  std::size_t blowups = 0;
};

/// Cesaro partial averages A_j = (1/j) sum_{i<=j} P_{s,s+i theta} phi(x0),
/// estimated along continuing paths.
CesaroReport cesaro_average(const ModelSpec& spec, const std::function<double(const Vec&)>& phi, double s,
                            const Vec& x0, std::size_t n, std::size_t n_paths, const StepConfig& cfg,
                            std::uint64_t master_seed);

struct IrreducibilityReport {
  std::size_t hits = 0;
  std::size_t n_paths = 0;
  std::size_t blowups = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  /// "evidence of reachability" iff ci_low > 0; otherwise "no evidence".
  bool evidence = false;
  const char* verdict() const { return evidence ? "evidence of reachability" : "no evidence"; }
};

/// Wilson score interval (95% for z = 1.959964); the lower end is exactly 0
/// when hits = 0.
std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n, double z = 1.959964);

/// Fraction of paths with |X(s + T) - y| < a. Blown-up paths count as misses.
IrreducibilityReport irreducibility_probe(const ModelSpec& spec, const Vec& x0, double s, const Vec& y,
                                          double a, double horizon, std::size_t n_paths,
                                          const StepConfig& cfg, std::uint64_t master_seed);

/// path_id,x_1..x_m,weight
void write_measure_csv(std::ostream& out, const EmpiricalMeasure& measure);
/// k,t,d_k,se_d,null_k,se_null,in_band
void write_periodicity_csv(std::ostream& out, const LawPeriodicityReport& report);
/// j,t,period_mean,period_stderr,average,stderr
void write_cesaro_csv(std::ostream& out, const CesaroReport& report);

}  // namespace psde
