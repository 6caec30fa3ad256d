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

#include "psde/generator.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "psde/parallel.hpp"

namespace psde {
namespace {

// Richardson extrapolation of a central difference of order two.
template <typename F>
double richardson(F&& central, double h) {
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

double frac(double v) { return v - std::floor(v); }

std::string where(double t, const Vec& x) {
  std::ostringstream out;
  out << "t = " << t << ", x = " << format_vec(x);
  return out.str();
}

void require_finite(double v, const char* term, double t, const Vec& x) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string("generator term '") + term + "' is not finite at " + where(t, x));
  }
}

// Start of the longest strictly monotone suffix.
std::size_t monotone_suffix(const std::vector<double>& profile, bool decreasing) {
  if (profile.empty()) return 0;
  std::size_t start = profile.size() - 1;
  while (start > 0) {
    const double prev = profile[start - 1];
    const double cur = profile[start];
    if (!std::isfinite(prev) || !std::isfinite(cur)) break;
    if (decreasing ? !(cur < prev) : !(cur > prev)) break;
    --start;
  }
  return start;
}

const double kKroneckerBase[kMaxDim] = {std::numbers::sqrt2, 1.7320508075688772, 2.23606797749979,
                                        2.6457513110645907, 3.3166247903554, 3.605551275463989,
                                        4.123105625617661, 4.358898943540674};

}  // namespace

double TestFunction::v_t(double t, const Vec& x) const {
  if (time_derivative) return time_derivative(t, x);
  const double h = fd_scale * (1.0 + std::abs(t));
  return richardson([&](double s) { return (value(t + s, x) - value(t - s, x)) / (2.0 * s); }, h);
}

Vec TestFunction::v_x(double t, const Vec& x) const {
  if (gradient) return gradient(t, x);
  const double h = fd_scale * (1.0 + x.norm());
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    g(i) = richardson(
        [&](double s) {
          Vec xp = x, xm = x;
          xp(i) += s;
          xm(i) -= s;
          return (value(t, xp) - value(t, xm)) / (2.0 * s);
        },
        h);
  }
  return g;
}

Mat TestFunction::v_xx(double t, const Vec& x) const {
  if (hessian) return hessian(t, x);
  const double h = fd_scale * (1.0 + x.norm());
  const Eigen::Index m = x.size();
  const double v0 = value(t, x);
  Mat hess(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    hess(i, i) = richardson(
        [&](double s) {
          Vec xp = x, xm = x;
          xp(i) += s;
          xm(i) -= s;
          return (value(t, xp) - 2.0 * v0 + value(t, xm)) / (s * s);
        },
        h);
    for (Eigen::Index j = 0; j < i; ++j) {
      hess(i, j) = hess(j, i) = richardson(
          [&](double s) {
            auto at = [&](double di, double dj) {
              Vec y = x;
              y(i) += di;
              y(j) += dj;
              return value(t, y);
            };
            return (at(s, s) - at(s, -s) - at(-s, s) + at(-s, -s)) / (4.0 * s * s);
          },
          h);
    }
  }
  return hess;
}

double TestFunction::derivative_mismatch(const std::vector<std::pair<double, Vec>>& points) const {
  TestFunction fd;
  fd.value = value;
  fd.fd_scale = fd_scale;
  double worst = 0.0;
  for (const auto& [t, x] : points) {
    if (time_derivative) {
      const double ref = fd.v_t(t, x);
      worst = std::max(worst, std::abs(time_derivative(t, x) - ref) / std::max(1.0, std::abs(ref)));
    }
    if (gradient) {
      const Vec ref = fd.v_x(t, x);
      worst = std::max(worst, (gradient(t, x) - ref).norm() / std::max(1.0, ref.norm()));
    }
    if (hessian) {
      const Mat ref = fd.v_xx(t, x);
      worst = std::max(worst, (hessian(t, x) - ref).norm() / std::max(1.0, ref.norm()));
    }
  }
  return worst;
}

TestFunction TestFunction::constant(double c) {
  TestFunction v;
  v.value = [c](double, const Vec&) { return c; };
  v.time_derivative = [](double, const Vec&) { return 0.0; };
  v.gradient = [](double, const Vec& x) -> Vec { return Vec::Zero(x.size()); };
  v.hessian = [](double, const Vec& x) -> Mat { return Mat::Zero(x.size(), x.size()); };
  return v;
}

TestFunction TestFunction::linear(const Vec& v0, double c) {
  TestFunction v;
  v.value = [v0, c](double, const Vec& x) { return v0.dot(x) + c; };
  v.time_derivative = [](double, const Vec&) { return 0.0; };
  v.gradient = [v0](double, const Vec&) -> Vec { return v0; };
  v.hessian = [](double, const Vec& x) -> Mat { return Mat::Zero(x.size(), x.size()); };
  return v;
}

TestFunction TestFunction::squared_norm(double c) {
  TestFunction v;
  v.value = [c](double, const Vec& x) { return x.squaredNorm() + c; };
  v.time_derivative = [](double, const Vec&) { return 0.0; };
  v.gradient = [](double, const Vec& x) -> Vec { return 2.0 * x; };
  v.hessian = [](double, const Vec& x) -> Mat { return 2.0 * Mat::Identity(x.size(), x.size()); };
  return v;
}

TestFunction TestFunction::combine(double a, const TestFunction& v1, double b, const TestFunction& v2) {
  TestFunction v;
  v.fd_scale = std::min(v1.fd_scale, v2.fd_scale);
  v.value = [=](double t, const Vec& x) { return a * v1.value(t, x) + b * v2.value(t, x); };
  if (v1.time_derivative && v2.time_derivative) {
    v.time_derivative = [=](double t, const Vec& x) { return a * v1.v_t(t, x) + b * v2.v_t(t, x); };
  }
  if (v1.gradient && v2.gradient) {
    v.gradient = [=](double t, const Vec& x) -> Vec { return a * v1.v_x(t, x) + b * v2.v_x(t, x); };
  }
  if (v1.hessian && v2.hessian) {
    v.hessian = [=](double t, const Vec& x) -> Mat { return a * v1.v_xx(t, x) + b * v2.v_xx(t, x); };
  }
  return v;
}

GeneratorValue apply_generator(const ModelSpec& spec, const TestFunction& v, double t, const Vec& x) {
  GeneratorValue out;
  const double v0 = v(t, x);
  const Vec grad = v.v_x(t, x);
  const Mat hess = v.v_xx(t, x);
  const Mat sigma = spec.diffusion(t, x);
  out.time_term = v.v_t(t, x);
  out.drift_term = grad.dot(spec.drift(t, x));
  out.diffusion_term = 0.5 * (sigma.transpose() * hess * sigma).trace();
  require_finite(v0, "V", t, x);
  require_finite(out.time_term, "V_t", t, x);
  require_finite(out.drift_term, "<V_x, b>", t, x);
  require_finite(out.diffusion_term, "trace", t, x);
  try {
    if (spec.has_small_jumps()) {
      const auto r = levy_integral(
          spec.levy,
          [&](const Vec& u) {
            const Vec d = spec.small_jump(t, x, u);
            return v(t, x + d) - v0 - grad.dot(d);
          },
          Region::small);
      out.small_jump_term = r.value;
      out.error += r.error;
      out.sub_cutoff_second_moment = spec.levy.small_remainder_second_moment();
    }
    if (spec.has_large_jumps()) {
      const auto r = levy_integral(
          spec.levy, [&](const Vec& u) { return v(t, x + spec.large_jump(t, x, u)) - v0; }, Region::large);
      out.large_jump_term = r.value;
      out.error += r.error;
    }
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " (generator at " + where(t, x) + ")");
  }
  out.value = out.time_term + out.drift_term + out.diffusion_term + out.small_jump_term + out.large_jump_term;
  require_finite(out.value, "L V", t, x);
  return out;
}

void AuditGrid::validate() const {
  if (radii.empty()) throw InvalidArgument("audit grid: radius ladder is empty");
  for (std::size_t j = 0; j < radii.size(); ++j) {
    if (!(radii[j] > 0.0) || (j > 0 && !(radii[j] > radii[j - 1]))) {
      throw InvalidArgument("audit grid: radii must be positive and strictly increasing");
    }
  }
  if (points_per_shell == 0) throw InvalidArgument("audit grid: points_per_shell must be positive");
  if (time_samples == 0) throw InvalidArgument("audit grid: the time sample list is empty");
  if (min_tail < 2) throw InvalidArgument("audit grid: min_tail must be at least 2");
}

std::vector<Vec> shell_points(int m, double radius, std::size_t count, std::size_t shell_index) {
  std::vector<Vec> points;
  points.reserve(count);
  const double shift = frac(static_cast<double>(shell_index) * std::numbers::phi);
  if (m == 1) {
    for (std::size_t j = 0; j < count; ++j) points.push_back(make_vec({j % 2 == 0 ? radius : -radius}));
    return points;
  }
  if (m == 2) {
    for (std::size_t j = 0; j < count; ++j) {
      const double angle = 2.0 * std::numbers::pi * (static_cast<double>(j) + shift) / static_cast<double>(count);
      points.push_back(make_vec({radius * std::cos(angle), radius * std::sin(angle)}));
    }
    return points;
  }
  // Coordinate axes first, then a Kronecker sequence pushed through the
  // inverse normal CDF and projected onto the sphere.
  for (int i = 0; i < m && points.size() < count; ++i) {
    for (double sign : {1.0, -1.0}) {
      if (points.size() == count) break;
      Vec e = Vec::Zero(m);
      e(i) = sign * radius;
      points.push_back(e);
    }
  }
  for (std::size_t j = 0; points.size() < count; ++j) {
    Vec z(m);
    for (int d = 0; d < m; ++d) {
      const double a = frac((static_cast<double>(j) + 0.5) * kKroneckerBase[d] + shift * (d + 1));
      z(d) = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * std::clamp(a, 1e-12, 1.0 - 1e-12) - 1.0);
    }
    points.push_back(radius * z / z.norm());
  }
  return points;
}

GeneratorReport audit_lyapunov(const ModelSpec& spec, const LyapunovCertificateSpec& cert,
                               const AuditGrid& grid) {
  grid.validate();
  spec.validate();
  GeneratorReport report;
  report.certificate = cert.name;
  report.grid = grid;
  const std::size_t n_r = grid.radii.size();
  const std::size_t n_t = grid.time_samples;
  const std::size_t n_p = grid.points_per_shell;
  for (std::size_t j = 0; j < n_t; ++j) {
    report.times.push_back(static_cast<double>(j) * spec.theta / static_cast<double>(n_t));
  }
  report.gamma = grid.moment_exponent > 0.0 ? grid.moment_exponent : spec.m + 1.0;
  const bool have_domination = cert.w && cert.q && cert.u;
  if (!have_domination) report.messages.push_back("certificate has no W, q, U; domination not audited");

  std::vector<std::vector<Vec>> shells(n_r);
  for (std::size_t r = 0; r < n_r; ++r) shells[r] = shell_points(spec.m, grid.radii[r], n_p, r);

  const std::size_t total = n_r * n_t * n_p;
  report.points.resize(total);
  std::vector<double> second(total, 0.0), gamma_moment(total, 0.0), ratio(total, 0.0);
  std::vector<std::string> failures(total);
  parallel_for(total, [&](std::size_t idx) {
    const std::size_t r = idx / (n_t * n_p);
    const std::size_t ti = (idx / n_p) % n_t;
    const std::size_t p = idx % n_p;
    GridPointRecord& rec = report.points[idx];
    rec.radius = grid.radii[r];
    rec.t = report.times[ti];
    rec.x = shells[r][p];
    const double t = rec.t;
    const Vec& x = rec.x;
    try {
      const GeneratorValue g = apply_generator(spec, cert.v, t, x);
      rec.lv = g.value;
      rec.error = g.error;
      rec.v = cert.v(t, x);
      if (have_domination) {
        rec.domination_excess = rec.v - cert.w(t, x).dot(cert.v.v_x(t, x)) - cert.q(t);
        rec.lower_excess = cert.u(t, x.norm()) - rec.v;
      }
      if (spec.has_small_jumps()) {
        second[idx] = levy_integral(
                          spec.levy, [&](const Vec& u) { return spec.small_jump(t, x, u).squaredNorm(); },
                          Region::small)
                          .value;
        gamma_moment[idx] = levy_integral(
                                spec.levy,
                                [&](const Vec& u) { return std::pow(spec.small_jump(t, x, u).norm(), report.gamma); },
                                Region::small)
                                .value;
      }
      if (spec.has_large_jumps()) {
        const double den = levy_integral(
                               spec.levy,
                               [&](const Vec& u) {
                                 const double gn = spec.large_jump(t, x, u).norm();
                                 return (1.0 + x.norm() + gn) * gn;
                               },
                               Region::large)
                               .value;
        ratio[idx] = den > 0.0 ? g.large_jump_term / den : 0.0;
      }
    } catch (const NumericalError& e) {
      rec.finite = false;
      failures[idx] = e.what();
    }
  });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  report.slice_max_lv.assign(n_r * n_t, -inf);
  report.slice_min_v.assign(n_r * n_t, inf);
  report.shell_max_lv.assign(n_r, -inf);
  report.shell_min_v.assign(n_r, inf);
  report.small_second_moment.assign(n_r, 0.0);
  report.small_gamma_moment.assign(n_r, 0.0);
  report.large_jump_ratio.assign(n_r, 0.0);
  report.sup_lv = -inf;
  std::vector<bool> shell_bad(n_r, false);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const GridPointRecord& rec = report.points[idx];
    const std::size_t r = idx / (n_t * n_p);
    const std::size_t slice = idx / n_p;
    if (!rec.finite) {
      ++report.non_finite;
      shell_bad[r] = true;
      if (report.messages.size() < 20) report.messages.push_back(failures[idx]);
      continue;
    }
    report.slice_max_lv[slice] = std::max(report.slice_max_lv[slice], rec.lv);
    report.slice_min_v[slice] = std::min(report.slice_min_v[slice], rec.v);
    report.shell_max_lv[r] = std::max(report.shell_max_lv[r], rec.lv);
    report.shell_min_v[r] = std::min(report.shell_min_v[r], rec.v);
    report.sup_lv = std::max(report.sup_lv, rec.lv);
    report.max_quadrature_error = std::max(report.max_quadrature_error, rec.error);
    report.small_second_moment[r] = std::max(report.small_second_moment[r], second[idx]);
    report.small_gamma_moment[r] = std::max(report.small_gamma_moment[r], gamma_moment[idx]);
    report.large_jump_ratio[r] = std::max(report.large_jump_ratio[r], ratio[idx]);
    if (rec.v < 0.0) ++report.negative_v;
    if (have_domination) {
      const double tol = grid.slack * (1.0 + std::abs(rec.v));
      if (rec.domination_excess > tol) ++report.domination_violations;
      if (rec.lower_excess > tol) ++report.lower_violations;
      report.worst_domination_excess = std::max(report.worst_domination_excess, rec.domination_excess);
      report.worst_lower_excess = std::max(report.worst_lower_excess, rec.lower_excess);
    }
  }
  for (std::size_t r = 0; r < n_r; ++r) {
    if (shell_bad[r]) report.shell_max_lv[r] = report.shell_min_v[r] = nan;
  }
  if (have_domination) {
    for (double t : report.times) {
      for (std::size_t r = 1; r < n_r; ++r) {
        if (!(cert.u(t, grid.radii[r]) > cert.u(t, grid.radii[r - 1]))) report.u_increasing = false;
      }
    }
  }

  report.h2_onset = monotone_suffix(report.shell_max_lv, true);
  report.coercive_onset = monotone_suffix(report.shell_min_v, false);
  const std::size_t need = std::min(grid.min_tail, n_r);
  report.h1_ok = report.non_finite == 0 && report.sup_lv <= grid.lv_bound;
  report.h2_ok = report.non_finite == 0 && n_r - report.h2_onset >= need &&
                 report.shell_max_lv.back() < grid.h2_threshold;
  report.coercive_ok = report.non_finite == 0 && report.negative_v == 0 &&
                       n_r - report.coercive_onset >= need &&
                       report.shell_min_v.back() > grid.coercive_threshold;
  report.domination_ok = have_domination && report.non_finite == 0 && report.domination_violations == 0 &&
                         report.lower_violations == 0 && report.u_increasing;
  return report;
}

void write_generator_csv(std::ostream& out, const GeneratorReport& report) {
  out << "R,t,max_LV,min_V\n";
  const std::size_t n_t = report.times.size();
  for (std::size_t r = 0; r < report.grid.radii.size(); ++r) {
    for (std::size_t ti = 0; ti < n_t; ++ti) {
      out << format_double(report.grid.radii[r]) << ',' << format_double(report.times[ti]) << ','
          << format_double(report.slice_max_lv[r * n_t + ti]) << ','
          << format_double(report.slice_min_v[r * n_t + ti]) << '\n';
    }
  }
}

void write_generator_summary(std::ostream& out, const GeneratorReport& report) {
  auto flag = [](bool b) { return b ? "true" : "false"; };
  out << "certificate: " << report.certificate << '\n'
      << "h1_ok: " << flag(report.h1_ok) << '\n'
      << "h2_ok: " << flag(report.h2_ok) << '\n'
      << "coercive_ok: " << flag(report.coercive_ok) << '\n'
      << "domination_ok: " << flag(report.domination_ok) << '\n'
      << "sup_LV: " << format_double(report.sup_lv) << '\n'
      << "max_quadrature_error: " << format_double(report.max_quadrature_error) << '\n'
      << "non_finite_points: " << report.non_finite << '\n'
      << "domination_violations: " << report.domination_violations
      << " (worst excess " << format_double(report.worst_domination_excess) << ")\n"
      << "lower_bound_violations: " << report.lower_violations
      << " (worst excess " << format_double(report.worst_lower_excess) << ")\n"
      << "U_increasing: " << flag(report.u_increasing) << '\n'
      << "h2_monotone_from_R: " << format_double(report.grid.radii[report.h2_onset]) << '\n'
      << "coercive_monotone_from_R: " << format_double(report.grid.radii[report.coercive_onset]) << '\n'
      << "small_moment_exponent: " << format_double(report.gamma) << '\n'
      << "R,shell_max_LV,shell_min_V,small_H2_moment,small_Hgamma_moment,large_jump_ratio\n";
  for (std::size_t r = 0; r < report.grid.radii.size(); ++r) {
    out << format_double(report.grid.radii[r]) << ',' << format_double(report.shell_max_lv[r]) << ','
        << format_double(report.shell_min_v[r]) << ',' << format_double(report.small_second_moment[r]) << ','
        << format_double(report.small_gamma_moment[r]) << ',' << format_double(report.large_jump_ratio[r])
        << '\n';
  }
  for (const auto& msg : report.messages) out << "note: " << msg << '\n';
}

DynkinResult dynkin_check(const ModelSpec& spec, const TestFunction& v, double t, const Vec& x, double h,
                          std::size_t n_paths, const StepConfig& cfg, std::uint64_t master_seed,
                          double tolerance_slope) {
  if (!(h > 0.0)) throw InvalidArgument("dynkin_check: h must be positive");
  if (n_paths < 2) throw InvalidArgument("dynkin_check: need at least two paths");
  const GeneratorValue g = apply_generator(spec, v, t, x);
  const double v0 = v(t, x);
  std::vector<double> quotient(n_paths, 0.0);
  std::vector<char> blown(n_paths, 0);
  parallel_for(n_paths, [&](std::size_t i) {
    const Snapshots snap = simulate_snapshots(spec, x, t, {t + h}, cfg, RngStream(master_seed, i));
    if (snap.blowup) {
      blown[i] = 1;
      return;
    }
    quotient[i] = (v(t + h, snap.states[0]) - v0) / h;
  });
  DynkinResult out;
  out.rhs = g.value;
  out.rhs_error = g.error;
  double sum = 0.0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (blown[i]) {
      ++out.blowups;
    } else {
      sum += quotient[i];
    }
  }
  if (static_cast<double>(out.blowups) > 0.01 * static_cast<double>(n_paths)) {
    std::ostringstream msg;
    msg << "dynkin_check: " << out.blowups << " of " << n_paths << " paths blew up within [t, t + h]";
    throw NumericalError(msg.str());
  }
  out.n_paths = n_paths - out.blowups;
  const double n = static_cast<double>(out.n_paths);
  out.lhs = sum / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (!blown[i]) ss += (quotient[i] - out.lhs) * (quotient[i] - out.lhs);
  }
  out.lhs_stderr = std::sqrt(ss / (n - 1.0) / n);
  const double denom = out.lhs_stderr + std::abs(out.rhs) * h * tolerance_slope;
  const double diff = std::abs(out.lhs - out.rhs);
  out.z_score = denom > 0.0 ? diff / denom : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace psde
