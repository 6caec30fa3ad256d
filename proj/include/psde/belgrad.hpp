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
#include <vector>

#include "psde/model.hpp"
#include "psde/rng.hpp"
#include "psde/simulate.hpp"

namespace psde {

/// Base state, tangent J(t) h and Bismut weight w(t) = sum <sigma^T Q^-1 J h, dB>.
struct DerivativeFlowState {
  double t = 0.0;
  Vec x;
  Vec jh;
  double w = 0.0;
};

/// Largest accepted condition number of Q = sigma sigma^T.
inline constexpr double kMaxDiffusionCondition = 1e12;

/// Euler path of the small-jump equation (same noise as simulate_path with
/// the same stream) together with its linearization
///   dJ = grad b J dt + sum_i J_i (d sigma / d x_i) dB + jump linearization
/// and the weight. Throws SingularDiffusion naming (t, x) when Q is singular
/// or worse conditioned than kMaxDiffusionCondition, and InvalidArgument for
/// models with large jumps. With with_weight = false only the tangent flow
/// is integrated (w stays 0) and Q is never inverted, which also covers
/// degenerate noise.
DerivativeFlowState evolve_derivative_flow(const ModelSpec& spec, const Vec& x0, const Vec& h, double s0,
                                           double horizon, const StepConfig& cfg, const RngStream& rng,
                                           bool with_weight = true);

using BoundedFn = std::function<double(const Vec&)>;

struct BelOptions {
  /// phi is clipped to [-phi_bound, phi_bound]; phi_bound also serves as the
  /// sup norm in Lipschitz ratios.
  double phi_bound = 10.0;
};

struct BelEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  /// Ensemble mean of w(t) and its standard error (should be near 0).
  double weight_mean = 0.0;
  double weight_std_error = 0.0;
  std::size_t n_paths = 0;
};

/// <grad E phi(Z(t)), h> ~ (1/(t - s0)) mean(phi(Z(t)) w(t)); path i uses
/// RngStream(master_seed, i).
BelEstimate bel_gradient(const ModelSpec& spec, const BoundedFn& phi, const Vec& x0, const Vec& h, double s0,
                         double t, std::size_t n_paths, const StepConfig& cfg, std::uint64_t master_seed,
                         const BelOptions& options = {});

struct FellerProbeReport {
  std::vector<double> times;
  std::vector<double> ratios;
  std::vector<double> std_errors;
  /// Least-squares M for ratio ~ M / sqrt(t - s0), and its residuals.
  double m_least_squares = 0.0;
  std::vector<double> residuals;
  /// Smallest M with ratio_i <= M / sqrt(t_i - s0) on every rung.
  double m_envelope = 0.0;
  bool envelope_dominates = false;
  /// Envelope fitted on the upper half of the ladder only.
  double m_upper = 0.0;
  /// The upper-half envelope also covers the lower rungs within 3 standard
  /// errors, i.e. the ratios grow no faster than 1/sqrt(t - s0) toward s0.
  bool shape_ok = false;
  bool least_squares_dominates = false;
};

/// Lipschitz ratios |E phi(X^x(t)) - E phi(X^y(t))| / (phi_bound |x - y|)
/// on a time ladder using shared seeds for the two starting points.
FellerProbeReport feller_probe(const ModelSpec& spec, const BoundedFn& phi, const Vec& x, const Vec& y, double s0,
                               const std::vector<double>& ladder, std::size_t n_paths, const StepConfig& cfg,
                               std::uint64_t master_seed, const BelOptions& options = {});

/// t,ratio,stderr,fitted_envelope
void write_feller_csv(std::ostream& out, const FellerProbeReport& report, double s0);

}  // namespace psde
