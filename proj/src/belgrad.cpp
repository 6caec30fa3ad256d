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

#include "psde/belgrad.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "psde/parallel.hpp"

namespace psde {
namespace {

std::size_t steps_for(double horizon, double dt) {
  const double ratio = horizon / dt;
  const double steps = std::round(ratio);
  if (!(horizon > 0.0) || steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "derivative flow: horizon " << horizon << " must be a positive multiple of dt = " << dt;
    throw InvalidArgument(msg.str());
  }
  return static_cast<std::size_t>(steps);
}

// Central-difference Jacobian of the compensator in x.
Mat compensator_jacobian(const Compensator& comp, int m, double t, const Vec& x) {
  Mat jac(m, m);
  const double h = jacobian_step(x);
  for (int j = 0; j < m; ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (comp(t, xp) - comp(t, xm)) / (2.0 * h);
  }
  return jac;
}

double clip(double v, double bound) { return std::clamp(v, -bound, bound); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  MeanSe out;
  out.mean = sum / n;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return out;
}

}  // namespace

DerivativeFlowState evolve_derivative_flow(const ModelSpec& spec, const Vec& x0, const Vec& h, double s0,
                                           double horizon, const StepConfig& cfg, const RngStream& rng,
                                           bool with_weight) {
  cfg.validate();
  if (spec.has_large_jumps()) {
    throw InvalidArgument("derivative flow: the model must have no large-jump coefficient (G = 0)");
  }
  if (h.size() != spec.m || x0.size() != spec.m) throw InvalidArgument("derivative flow: dimension mismatch");
  const std::size_t n = steps_for(horizon, cfg.dt);
  const int m = spec.m;
  const double dt = cfg.dt;
  const Compensator comp(spec, cfg.compensator_mode);
  RngStream brownian = rng.substream(streams::kBrownian);
  RngStream small = rng.substream(streams::kSmallJumps);
  DerivativeFlowState state{s0, x0, h, 0.0};
  std::vector<JumpEvent> events;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = s0 + static_cast<double>(i) * dt;
    const Vec& x = state.x;
    const Vec dB = sample_brownian_increments(spec.k, dt, brownian);
    events.clear();
    if (comp.active()) events = sample_small_jump_events(spec.levy, t, dt, small, cfg.event_budget);

    const Mat sigma = spec.diffusion(t, x);
    if (with_weight) {
      const Mat q = sigma * sigma.transpose();
      const Eigen::SelfAdjointEigenSolver<Mat> eig(q, Eigen::EigenvaluesOnly);
      const double lo = eig.eigenvalues().minCoeff();
      const double hi = eig.eigenvalues().maxCoeff();
      if (!(lo > 0.0) || hi / lo > kMaxDiffusionCondition) {
        std::ostringstream msg;
        msg << "sigma sigma^T is singular or ill-conditioned (condition " << (lo > 0.0 ? hi / lo : INFINITY)
            << ") at t = " << t << ", x = " << format_vec(x);
        throw SingularDiffusion(msg.str());
      }
      const Vec qinv_j = q.ldlt().solve(state.jh);
      state.w += (sigma.transpose() * qinv_j).dot(dB);
    }

    Mat step = Mat::Identity(m, m) + drift_jacobian(spec, t, x) * dt;
    for (int d = 0; d < m; ++d) {
      const Vec col = diffusion_partial(spec, t, x, d) * dB;
      step.col(d) += col;
    }
    Vec next = x + spec.drift(t, x) * dt + sigma * dB;
    if (comp.active()) {
      for (const auto& e : events) {
        next += spec.small_jump(t, x, e.mark);
        step += small_jump_jacobian(spec, t, x, e.mark);
      }
      next -= dt * comp(t, x);
      step -= dt * compensator_jacobian(comp, m, t, x);
    }
    state.jh = step * state.jh;
    state.x = next;
    state.t = s0 + static_cast<double>(i + 1) * dt;
    if (!state.x.allFinite() || !state.jh.allFinite()) {
      throw BlowUpError(state.t, state.x, "derivative flow left the finite range at t = " + std::to_string(state.t));
    }
  }
  return state;
}

BelEstimate bel_gradient(const ModelSpec& spec, const BoundedFn& phi, const Vec& x0, const Vec& h, double s0,
                         double t, std::size_t n_paths, const StepConfig& cfg, std::uint64_t master_seed,
                         const BelOptions& options) {
  if (!(t > s0)) throw InvalidArgument("bel_gradient: need t > s0");
  if (n_paths < 2) throw InvalidArgument("bel_gradient: need at least two paths");
  std::vector<double> sample(n_paths), weight(n_paths);
  const double span = t - s0;
  parallel_for(n_paths, [&](std::size_t i) {
    const DerivativeFlowState st = evolve_derivative_flow(spec, x0, h, s0, span, cfg, RngStream(master_seed, i));
    sample[i] = clip(phi(st.x), options.phi_bound) * st.w / span;
    weight[i] = st.w;
  });
  const MeanSe est = mean_se(sample);
  const MeanSe w = mean_se(weight);
  return {est.mean, est.se, w.mean, w.se, n_paths};
}

FellerProbeReport feller_probe(const ModelSpec& spec, const BoundedFn& phi, const Vec& x, const Vec& y, double s0,
                               const std::vector<double>& ladder, std::size_t n_paths, const StepConfig& cfg,
                               std::uint64_t master_seed, const BelOptions& options) {
  if (ladder.empty()) throw InvalidArgument("feller_probe: empty time ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > s0) || (i > 0 && !(ladder[i] > ladder[i - 1]))) {
      throw InvalidArgument("feller_probe: ladder times must be increasing and after s0");
    }
  }
  if (n_paths < 2) throw InvalidArgument("feller_probe: need at least two paths");
  const double gap = (x - y).norm();
  const std::size_t n_t = ladder.size();
  std::vector<std::vector<double>> diff(n_t, std::vector<double>(n_paths, 0.0));
  std::vector<char> blown(n_paths, 0);
  parallel_for(n_paths, [&](std::size_t i) {
    const Snapshots sx = simulate_snapshots(spec, x, s0, ladder, cfg, RngStream(master_seed, i));
    const Snapshots sy = simulate_snapshots(spec, y, s0, ladder, cfg, RngStream(master_seed, i));
    if (sx.blowup || sy.blowup) {
      blown[i] = 1;
      return;
    }
    for (std::size_t k = 0; k < n_t; ++k) {
      diff[k][i] = clip(phi(sx.states[k]), options.phi_bound) - clip(phi(sy.states[k]), options.phi_bound);
    }
  });
  const auto n_blown = static_cast<std::size_t>(std::count(blown.begin(), blown.end(), 1));
  if (static_cast<double>(n_blown) > 0.01 * static_cast<double>(n_paths)) {
    throw NumericalError("feller_probe: more than 1% of the paths blew up");
  }
  FellerProbeReport report;
  report.times = ladder;
  const double scale = gap > 0.0 ? options.phi_bound * gap : 1.0;
  for (std::size_t k = 0; k < n_t; ++k) {
    std::vector<double> kept;
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (!blown[i]) kept.push_back(diff[k][i]);
    }
    const MeanSe ms = mean_se(kept);
    report.ratios.push_back(gap > 0.0 ? std::abs(ms.mean) / scale : 0.0);
    report.std_errors.push_back(gap > 0.0 ? ms.se / scale : 0.0);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < n_t; ++k) {
    const double inv = 1.0 / std::sqrt(ladder[k] - s0);
    num += report.ratios[k] * inv;
    den += inv * inv;
    report.m_envelope = std::max(report.m_envelope, report.ratios[k] * std::sqrt(ladder[k] - s0));
  }
  report.m_least_squares = num / den;
  report.envelope_dominates = true;
  report.least_squares_dominates = true;
  for (std::size_t k = 0; k < n_t; ++k) {
    const double inv = 1.0 / std::sqrt(ladder[k] - s0);
    report.residuals.push_back(report.ratios[k] - report.m_least_squares * inv);
    report.envelope_dominates = report.envelope_dominates && report.ratios[k] <= report.m_envelope * inv * (1.0 + 1e-12);
    report.least_squares_dominates = report.least_squares_dominates && report.ratios[k] <= report.m_least_squares * inv;
  }
  const std::size_t upper = n_t / 2;
  for (std::size_t k = upper; k < n_t; ++k) {
    report.m_upper = std::max(report.m_upper, report.ratios[k] * std::sqrt(ladder[k] - s0));
  }
  report.shape_ok = true;
  for (std::size_t k = 0; k < upper; ++k) {
    const double bound = report.m_upper / std::sqrt(ladder[k] - s0) + 3.0 * report.std_errors[k];
    report.shape_ok = report.shape_ok && report.ratios[k] <= bound;
  }
  return report;
}

void write_feller_csv(std::ostream& out, const FellerProbeReport& report, double s0) {
  out << "t,ratio,stderr,fitted_envelope\n";
  for (std::size_t k = 0; k < report.times.size(); ++k) {
    out << format_double(report.times[k]) << ',' << format_double(report.ratios[k]) << ','
        << format_double(report.std_errors[k]) << ','
        << format_double(report.m_envelope / std::sqrt(report.times[k] - s0)) << '\n';
  }
}

}  // namespace psde
