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

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "psde/levy.hpp"
#include "psde/rng.hpp"
#include "psde/types.hpp"

namespace psde {

using DriftFn = std::function<Vec(double t, const Vec& x)>;
using DiffusionFn = std::function<Mat(double t, const Vec& x)>;
using JumpFn = std::function<Vec(double t, const Vec& x, const Vec& u)>;
/// m x m Jacobian in x.
using JacobianFn = std::function<Mat(double t, const Vec& x)>;
/// Partial derivative of sigma (m x k) with respect to x_i.
using DiffusionPartialFn = std::function<Mat(double t, const Vec& x, int i)>;
/// m x m Jacobian in x of a jump coefficient at mark u.
using JumpJacobianFn = std::function<Mat(double t, const Vec& x, const Vec& u)>;

/// Coefficients (b, sigma, H, G) of a theta-periodic jump diffusion
///
///   dX = b dt + sigma dB + int_{|u|<1} H dN~ + int_{|u|>=1} G dN
///
/// with state dimension m, Brownian dimension k and mark dimension l.
/// An empty small_jump or large_jump means that coefficient is identically
/// zero; an empty Jacobian means finite differences are used.
///
/// Immutable after construction and safe to share between threads.
struct ModelSpec {
  std::string name;
  double theta = 1.0;
  int m = 1;
  int k = 1;
  int l = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  JumpFn small_jump;
  JumpFn large_jump;
  LevyMeasureSpec levy;

  JacobianFn drift_jacobian;
  DiffusionPartialFn diffusion_partial;
  JumpJacobianFn small_jump_jacobian;

  /// H(t, x, u) = H(t, x, 0) + A(t, x) u; enables closed-form compensators.
  bool small_jump_affine_in_u = false;
  /// Optional E[H(t, x, U)] with U drawn from the normalized truncated small
  /// part; required by the per_event compensator mode.
  DriftFn small_jump_mean;

  bool has_small_jumps() const { return static_cast<bool>(small_jump) && levy.has_small(); }
  bool has_large_jumps() const { return static_cast<bool>(large_jump) && levy.has_large(); }

  /// Checks dimensions and that the required callables are present.
  void validate() const;
};

/// Coefficient evaluation helpers; zero when the coefficient is absent.
Vec eval_small_jump(const ModelSpec& spec, double t, const Vec& x, const Vec& u);
Vec eval_large_jump(const ModelSpec& spec, double t, const Vec& x, const Vec& u);

/// Central-difference step used for coefficient Jacobians.
double jacobian_step(const Vec& x);
Mat drift_jacobian(const ModelSpec& spec, double t, const Vec& x);
Mat diffusion_partial(const ModelSpec& spec, double t, const Vec& x, int i);
Mat small_jump_jacobian(const ModelSpec& spec, double t, const Vec& x, const Vec& u);

/// A theta-periodic scalar function given by Fourier coefficients
/// [c0, a1, b1, a2, b2, ...]: c0 + sum_k a_k cos(k w t) + b_k sin(k w t),
/// w = 2 pi / theta.
class FourierSeries {
 public:
  FourierSeries() = default;
  FourierSeries(std::vector<double> coefficients, double theta);
  double operator()(double t) const;
  double derivative(double t) const;
  double min_over_period(int samples = 4096) const;
  const std::vector<double>& coefficients() const { return coefficients_; }

 private:
  std::vector<double> coefficients_{0.0};
  double omega_ = 0.0;
};

/// Named parameters of a builtin model; values are lists of numbers, or a
/// single string (for example a file path).
class Params {
 public:
  Params() = default;
  explicit Params(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

  void set(const std::string& key, const std::string& value) { raw_[key] = value; }
  bool has(const std::string& key) const { return raw_.count(key) != 0; }
  double number(const std::string& key, double fallback) const;
  std::vector<double> list(const std::string& key, std::vector<double> fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  const std::map<std::string, std::string>& raw() const { return raw_; }

  /// Throws InvalidArgument naming the first key not in allowed.
  void require_known(const std::vector<std::string>& allowed, const std::string& model) const;

 private:
  std::map<std::string, std::string> raw_;
};

/// Parameters of the stochastic Lorenz builtin. The time functions must be
/// theta-periodic and continuously differentiable with min alpha, beta > 0.
struct LorenzParams {
  double theta = 1.0;
  std::function<double(double)> alpha, alpha_prime;
  std::function<double(double)> beta;
  std::function<double(double)> mu, mu_prime;
  double noise_eps = 1.0;
  double noise_perturbation = 0.0;
  double noise_modulation = 0.0;
  double small_scale = 1.0;
  double large_scale = 1.0;
};

ModelSpec lorenz_model(const LorenzParams& params, LevyMeasureSpec levy);

/// Builtin models:
///   periodic_ou  dX = (-a X + c cos(2 pi t / theta)) dt + sigma dB (+ jumps)
///   dissipative  b = -kappa x + forcing cos(2 pi t / theta), sigma = s I
///   lorenz       Lorenz drift with periodic alpha, beta, mu (Fourier lists)
///   lemniscate   gradient-plus-rotation field of the Bernoulli lemniscate
///   frozen       b = sigma = H = 0, G = large_scale E u (default 0)
///   custom       polynomial/Fourier description file (params.file)
/// Jump coefficients of the builtins are H = small_scale E u and
/// G = large_scale E u, where E embeds R^l into R^m (identity for l = m,
/// a column of ones for l = 1).
ModelSpec builtin(const std::string& name, const Params& params,
                  LevyMeasureSpec levy = LevyMeasureSpec::none());

/// Names accepted by builtin().
std::vector<std::string> builtin_names();
/// Parameter names accepted by each builtin.
std::vector<std::string> builtin_param_names(const std::string& name);

/// Lemniscate helper functions, exposed for tests and certificates.
namespace lemniscate {
double invariant(const Vec& x);                // I(x)
Vec invariant_gradient(const Vec& x);          // dI/dx
double potential(double i);                    // V(I) = I^2 / (2 (1 + I^2)^(3/4))
double f(double i);                            // dV/dI
double g(double i);                            // rotational weight
Vec drift(const Vec& x);
}  // namespace lemniscate

/// Coefficients replaced by their values at n x / |x| outside the ball of
/// radius n, so they agree with the base inside and are bounded outside.
class TruncatedModel {
 public:
  TruncatedModel(ModelSpec base, double radius);

  const ModelSpec& spec() const { return truncated_; }
  const ModelSpec& base() const { return base_; }
  double radius() const { return radius_; }
  Vec project(const Vec& x) const;

 private:
  ModelSpec base_;
  ModelSpec truncated_;
  double radius_;
};

TruncatedModel truncate(const ModelSpec& spec, double radius);
/// Truncating again at a radius at least as large changes nothing.
TruncatedModel truncate(const TruncatedModel& model, double radius);

struct PeriodicityReport {
  double max_deviation = 0.0;
  bool pass = true;
};

/// Compares each coefficient at n_samples random (t, x, u) with its value at
/// (t + theta, x, u). pass iff max_deviation <= 1e-12. Throws NumericalError
/// naming the point if a coefficient is non-finite.
PeriodicityReport validate_periodicity(const ModelSpec& spec, std::size_t n_samples, RngStream& rng);

}  // namespace psde
