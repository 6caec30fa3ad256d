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
#include <limits>
#include <string>
#include <vector>

#include "psde/model.hpp"
#include "psde/simulate.hpp"

namespace psde {

using ScalarFieldFn = std::function<double(double t, const Vec& x)>;
using GradientFn = std::function<Vec(double t, const Vec& x)>;
using HessianFn = std::function<Mat(double t, const Vec& x)>;

/// Scalar test function V(t, x) >= 0. Missing derivatives are replaced by
/// Richardson-extrapolated central differences with step
/// fd_scale * (1 + |x|) in space and fd_scale * (1 + |t|) in time.
struct TestFunction {
  ScalarFieldFn value;
  ScalarFieldFn time_derivative;
  GradientFn gradient;
  HessianFn hessian;
  double fd_scale = 1e-4;

  double operator()(double t, const Vec& x) const { return value(t, x); }
  double v_t(double t, const Vec& x) const;
  Vec v_x(double t, const Vec& x) const;
  Mat v_xx(double t, const Vec& x) const;

  /// Largest relative gap between the analytic derivatives that are present
  /// and their finite-difference counterparts over the given points.
  double derivative_mismatch(const std::vector<std::pair<double, Vec>>& points) const;

  static TestFunction constant(double c);
  /// V = <v0, x> + c.
  static TestFunction linear(const Vec& v0, double c);
  /// V = |x|^2 + c.
  static TestFunction squared_norm(double c = 1.0);
  /// a V1 + b V2; derivatives combine when both sides have them.
  static TestFunction combine(double a, const TestFunction& v1, double b, const TestFunction& v2);
};

struct GeneratorValue {
  double value = 0.0;
  /// Quadrature error estimate of the jump integrals.
  double error = 0.0;
  double time_term = 0.0;
  double drift_term = 0.0;
  double diffusion_term = 0.0;
  double small_jump_term = 0.0;
  double large_jump_term = 0.0;
  /// int_{|u| < delta} |u|^2 nu(du), the part of the small-jump integral the
  /// truncated simulation and quadrature leave out.
  double sub_cutoff_second_moment = 0.0;
};

/// L V(t, x) = V_t + <V_x, b> + 1/2 tr(sigma^T V_xx sigma)
///           + int_{delta <= |u| < 1} [V(x + H) - V - <V_x, H>] nu(du)
///           + int_{|u| >= 1} [V(x + G) - V] nu(du).
/// Throws NumericalError naming (t, x) on non-finite terms.
GeneratorValue apply_generator(const ModelSpec& spec, const TestFunction& v, double t, const Vec& x);

/// V, W, q, U of a Lyapunov certificate: U(t, |x|) <= V <= <W, V_x> + q.
struct LyapunovCertificateSpec {
  std::string name;
  TestFunction v;
  std::function<Vec(double t, const Vec& x)> w;
  std::function<double(double t)> q;
  std::function<double(double t, double r)> u;
};

struct AuditGrid {
  std::vector<double> radii{1, 2, 4, 8, 16, 32, 64, 128};
  std::size_t points_per_shell = 64;
  std::size_t time_samples = 8;
  /// h1_ok needs sup L V <= lv_bound.
  double lv_bound = std::numeric_limits<double>::infinity();
  /// h2_ok needs the last shell max of L V below this value.
  double h2_threshold = -10.0;
  /// coercive_ok needs the last shell inf of V above this value.
  double coercive_threshold = 10.0;
  /// Monotone trends are judged on the longest strictly monotone suffix of
  /// the profile, which must hold at least this many radii.
  std::size_t min_tail = 3;
  double slack = 1e-9;
  /// Exponent of the reported small-jump moment int |H|^gamma nu(du);
  /// 0 means state dimension + 1.
  double moment_exponent = 0.0;

  void validate() const;
};

struct GridPointRecord {
  double radius = 0.0;
  double t = 0.0;
  Vec x;
  double lv = 0.0;
  double v = 0.0;
  double error = 0.0;
  bool finite = true;
  /// V - <W, V_x> - q (positive values violate domination).
  double domination_excess = 0.0;
  /// U(t, |x|) - V (positive values violate the lower bound).
  double lower_excess = 0.0;
};

struct GeneratorReport {
  std::string certificate;
  AuditGrid grid;
  std::vector<double> times;
  std::vector<GridPointRecord> points;
  /// Per (radius, time) slice, row-major in radius: max L V and min V.
  std::vector<double> slice_max_lv;
  std::vector<double> slice_min_v;
  /// Per radius over all times and shell points.
  std::vector<double> shell_max_lv;
  std::vector<double> shell_min_v;
  /// Per radius: max int |H|^2 nu, max int |H|^gamma nu, and max of the
  /// large-jump term over int (1 + |x| + |G|) |G| nu (0 when that is 0).
  std::vector<double> small_second_moment;
  std::vector<double> small_gamma_moment;
  std::vector<double> large_jump_ratio;
  double gamma = 0.0;
  double sup_lv = 0.0;
  double max_quadrature_error = 0.0;
  std::size_t non_finite = 0;
  std::size_t negative_v = 0;
  std::size_t domination_violations = 0;
  std::size_t lower_violations = 0;
  double worst_domination_excess = 0.0;
  double worst_lower_excess = 0.0;
  bool u_increasing = true;
  /// Index into radii where the strictly monotone tail starts.
  std::size_t h2_onset = 0;
  std::size_t coercive_onset = 0;
  std::vector<std::string> messages;

  bool h1_ok = false;
  bool h2_ok = false;
  bool coercive_ok = false;
  bool domination_ok = false;
  bool all_ok() const { return h1_ok && h2_ok && coercive_ok && domination_ok; }
};

/// Evaluates L V and the certificate inequalities on shells of radius R
/// (quasi-random points, a different rotation per shell) at times j theta / n.
GeneratorReport audit_lyapunov(const ModelSpec& spec, const LyapunovCertificateSpec& cert,
                               const AuditGrid& grid = {});

/// Points used on one shell; exposed for tests.
std::vector<Vec> shell_points(int m, double radius, std::size_t count, std::size_t shell_index);

/// R,t,max_LV,min_V rows.
void write_generator_csv(std::ostream& out, const GeneratorReport& report);
/// Human-readable verdict block and profiles.
void write_generator_summary(std::ostream& out, const GeneratorReport& report);

struct DynkinResult {
  double lhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
  double rhs_error = 0.0;
  double z_score = 0.0;
  std::size_t n_paths = 0;
  std::size_t blowups = 0;
};

/// Monte Carlo Dynkin quotient (E V(t + h, X(t + h)) - V(t, x)) / h against
/// L V(t, x); z = |lhs - rhs| / (stderr + |rhs| h slope). Paths are simulated
/// with cfg (dt must divide h). Throws NumericalError if more than 1% of the
/// paths blow up.
DynkinResult dynkin_check(const ModelSpec& spec, const TestFunction& v, double t, const Vec& x, double h,
                          std::size_t n_paths, const StepConfig& cfg, std::uint64_t master_seed,
                          double tolerance_slope = 1.0);

}  // namespace psde
