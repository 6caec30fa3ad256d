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

#include "psde/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "psde/parallel.hpp"

namespace psde {
namespace {

std::size_t grid_steps(double horizon, double dt, const char* what) {
  if (!(horizon > 0.0)) throw InvalidArgument(std::string(what) + ": horizon must be positive");
  const double ratio = horizon / dt;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << what << ": horizon " << horizon << " is not a multiple of dt = " << dt;
    throw InvalidArgument(msg.str());
  }
  return static_cast<std::size_t>(steps);
}

bool out_of_range(const Vec& x, double bound) { return !x.allFinite() || x.norm() > bound; }

// Drift, diffusion, small jumps and compensator over [a, a + h) from x.
template <typename EventRange>
Vec advance_piece(const ModelSpec& spec, const Compensator& comp, double a, double h, const Vec& x,
                  const Vec& dB, const EventRange& events, std::size_t first, std::size_t last,
                  Vec* small_sum, std::vector<AppliedJump>* log) {
  Vec next = x + spec.drift(a, x) * h + spec.diffusion(a, x) * dB;
  if (comp.active()) {
    for (std::size_t e = first; e < last; ++e) {
      const Vec d = spec.small_jump(a, x, events[e].mark);
      next += d;
      if (small_sum) *small_sum += d;
      if (log) log->push_back({events[e], d});
    }
    next -= h * comp(a, x);
  }
  return next;
}

// Euler engine for one path on the grid s0 + i dt, with large jumps merged in.
class Stepper {
 public:
  Stepper(const ModelSpec& spec, const Vec& x0, double s0, std::size_t n_steps, const StepConfig& cfg,
          const RngStream& rng)
      : spec_(spec),
        cfg_(cfg),
        comp_(spec, cfg.compensator_mode),
        brownian_(rng.substream(streams::kBrownian)),
        small_(rng.substream(streams::kSmallJumps)),
        bridge_(rng.substream(streams::kBridge)),
        s0_(s0),
        n_steps_(n_steps),
        x_(x0),
        small_sum_(Vec::Zero(spec.m)) {
    if (spec.has_large_jumps()) {
      RngStream large = rng.substream(streams::kLargeJumps);
      large_ = sample_large_jump_events(spec.levy, s0, static_cast<double>(n_steps) * cfg.dt, large);
    }
    check_exit(s0);
  }

  double grid_time(std::size_t i) const { return s0_ + static_cast<double>(i) * cfg_.dt; }
  std::size_t step_index() const { return i_; }
  bool finished() const { return i_ >= n_steps_ || blowup_.has_value(); }
  const Vec& state() const { return x_; }
  const std::optional<PathBlowUp>& blowup() const { return blowup_; }
  const std::optional<PathExit>& exited() const { return exit_; }

  /// Sum of small-jump displacements since the last call.
  Vec take_small_sum() {
    Vec out = small_sum_;
    small_sum_.setZero();
    return out;
  }

  /// Advances one grid step; on_large(tau, applied) is called after each
  /// large jump with the post-jump state available through state().
  template <typename OnLarge>
  void step(std::vector<AppliedJump>* log, OnLarge&& on_large) {
    const double t0 = grid_time(i_);
    const double t1 = grid_time(i_ + 1);
    const double dt = cfg_.dt;
    const bool last_step = i_ + 1 == n_steps_;
    Vec dB = sample_brownian_increments(spec_.k, dt, brownian_);
    small_events_.clear();
    if (comp_.active()) {
      small_events_ = sample_small_jump_events(spec_.levy, t0, dt, small_, cfg_.event_budget);
    }
    double a = t0;
    double remaining = dt;
    std::size_t first = 0;
    while (next_large_ < large_.size() && (large_[next_large_].time <= t1 || last_step)) {
      const JumpEvent& jump = large_[next_large_++];
      const double h = std::min(jump.time, t1) - a;
      if (h > 0.0) {
        const Vec piece = bridge_piece(dB, h, remaining);
        std::size_t last = first;
        while (last < small_events_.size() && small_events_[last].time < jump.time) ++last;
        if (!advance(a, h, piece, first, last, log)) return;
        first = last;
        a += h;
      }
      const Vec d = eval_large_jump(spec_, jump.time, x_, jump.mark);
      x_ += d;
      AppliedJump applied{jump, d};
      if (!check(jump.time)) return;
      if (log) log->push_back(applied);
      on_large(jump.time, applied);
    }
    if (remaining > 0.0 && t1 - a > 0.0) {
      if (!advance(a, t1 - a, dB, first, small_events_.size(), log)) return;
    }
    ++i_;
  }

 private:
  // Brownian-bridge split of the remaining increment dB over `remaining`
  // time: returns the increment over the first h units and updates dB.
  Vec bridge_piece(Vec& dB, double h, double& remaining) {
    if (h >= remaining) {
      Vec piece = dB;
      dB.setZero();
      remaining = 0.0;
      return piece;
    }
    const double frac = h / remaining;
    const double sd = std::sqrt(h * (remaining - h) / remaining);
    Vec piece(dB.size());
    for (Eigen::Index j = 0; j < dB.size(); ++j) piece(j) = frac * dB(j) + sd * bridge_.normal();
    dB -= piece;
    remaining -= h;
    return piece;
  }

  bool advance(double a, double h, const Vec& dB, std::size_t first, std::size_t last,
               std::vector<AppliedJump>* log) {
    x_ = advance_piece(spec_, comp_, a, h, x_, dB, small_events_, first, last, &small_sum_, log);
    return check(a + h);
  }

  bool check(double t) {
    if (out_of_range(x_, cfg_.blowup_bound)) {
      blowup_ = PathBlowUp{t, x_, x_.allFinite() ? "state norm above blow-up bound" : "non-finite state"};
      return false;
    }
    check_exit(t);
    return true;
  }

  void check_exit(double t) {
    if (cfg_.truncation_radius && !exit_ && x_.norm() >= *cfg_.truncation_radius) {
      exit_ = PathExit{t, x_};
    }
  }

  const ModelSpec& spec_;
  const StepConfig& cfg_;
  Compensator comp_;
  RngStream brownian_, small_, bridge_;
  std::vector<JumpEvent> large_;
  std::size_t next_large_ = 0;
  std::vector<JumpEvent> small_events_;
  double s0_;
  std::size_t n_steps_;
  std::size_t i_ = 0;
  Vec x_;
  Vec small_sum_;
  std::optional<PathBlowUp> blowup_;
  std::optional<PathExit> exit_;
};

SamplePath run_path(const ModelSpec& spec, const Vec& x0, double s0, std::size_t n_steps,
                    const StepConfig& cfg, const RngStream& rng) {
  SamplePath path;
  path.s0 = s0;
  path.x0 = x0;
  auto push = [&](double t, const Vec& x, RowKind kind, double norm) {
    path.times.push_back(t);
    path.states.push_back(x);
    path.row_kind.push_back(kind);
    path.row_norm.push_back(norm);
  };
  push(s0, x0, RowKind::none, 0.0);
  Stepper stepper(spec, x0, s0, n_steps, cfg, rng);
  std::vector<AppliedJump>* log = cfg.record_events ? &path.events : nullptr;
  Vec pending = Vec::Zero(spec.m);
  auto flush_small = [&]() {
    pending += stepper.take_small_sum();
    const double norm = pending.norm();
    pending.setZero();
    return norm;
  };
  while (!stepper.finished()) {
    stepper.step(log, [&](double tau, const AppliedJump& applied) {
      pending += stepper.take_small_sum();
      push(tau, stepper.state(), RowKind::large, applied.displacement.norm());
    });
    if (stepper.blowup()) {
      const double norm = flush_small();
      push(stepper.blowup()->time, stepper.state(), norm > 0.0 ? RowKind::small : RowKind::none, norm);
      break;
    }
    const std::size_t i = stepper.step_index();
    if (i % cfg.record_every == 0 || i == n_steps) {
      const double norm = flush_small();
      const bool had_small = norm > 0.0;
      push(stepper.grid_time(i), stepper.state(), had_small ? RowKind::small : RowKind::none, norm);
    }
  }
  path.exited = stepper.exited();
  path.blowup = stepper.blowup();
  return path;
}

const ModelSpec& effective_spec(const ModelSpec& spec, const StepConfig& cfg,
                                std::optional<TruncatedModel>& holder) {
  if (!cfg.truncation_radius) return spec;
  holder.emplace(spec, *cfg.truncation_radius);
  return holder->spec();
}

}  // namespace

void StepConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("sim.dt must be positive");
  if (truncation_radius && !(*truncation_radius > 0.0)) {
    throw InvalidArgument("sim.truncation_radius must be positive");
  }
  if (event_budget == 0) throw InvalidArgument("sim.event_budget must be positive");
  if (record_every == 0) throw InvalidArgument("sim.record_every must be positive");
}

const char* to_string(RowKind kind) {
  switch (kind) {
    case RowKind::small:
      return "small";
    case RowKind::large:
      return "large";
    case RowKind::none:
      break;
  }
  return "none";
}

Compensator::Compensator(const ModelSpec& spec, CompensatorMode mode)
    : spec_(&spec), mode_(mode), active_(spec.has_small_jumps()) {
  if (!active_) return;
  rate_ = spec.levy.small_rate();
  first_moment_ = spec.levy.small_first_moment();
  if (mode == CompensatorMode::per_event && !spec.small_jump_mean) {
    throw InvalidArgument("compensator mode per_event needs a closed-form small-jump mean for model '" +
                          spec.name + "'");
  }
}

Vec Compensator::operator()(double t, const Vec& x) const {
  const ModelSpec& spec = *spec_;
  if (!active_) return Vec::Zero(spec.m);
  if (mode_ == CompensatorMode::per_event) return rate_ * spec.small_jump_mean(t, x);
  if (spec.small_jump_affine_in_u) {
    const Vec zero = Vec::Zero(spec.l);
    const Vec h0 = spec.small_jump(t, x, zero);
    Vec out = rate_ * h0;
    for (int j = 0; j < spec.l; ++j) {
      if (first_moment_(j) == 0.0) continue;
      Vec e = zero;
      e(j) = 1.0;
      out += first_moment_(j) * (spec.small_jump(t, x, e) - h0);
    }
    return out;
  }
  Vec out(spec.m);
  for (int i = 0; i < spec.m; ++i) {
    out(i) = levy_integral(spec.levy, [&](const Vec& u) { return spec.small_jump(t, x, u)(i); },
                           Region::small)
                 .value;
  }
  return out;
}

Vec euler_step(const ModelSpec& spec, double t, const Vec& x, const StepConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (!x.allFinite()) throw InvalidArgument("euler_step: state " + format_vec(x) + " is not finite");
  const Compensator comp(spec, cfg.compensator_mode);
  const Vec dB = sample_brownian_increments(spec.k, cfg.dt, rng);
  std::vector<JumpEvent> events;
  if (comp.active()) events = sample_small_jump_events(spec.levy, t, cfg.dt, rng, cfg.event_budget);
  const Vec next =
      advance_piece(spec, comp, t, cfg.dt, x, dB, events, 0, events.size(), nullptr, nullptr);
  if (!next.allFinite()) {
    std::ostringstream msg;
    msg << "euler_step produced a non-finite state from t = " << t << ", x = " << format_vec(x);
    throw BlowUpError(t, x, msg.str());
  }
  return next;
}

SamplePath simulate_path(const ModelSpec& spec, const Vec& x0, double s0, double horizon,
                         const StepConfig& cfg, const RngStream& rng) {
  cfg.validate();
  spec.validate();
  const std::size_t n_steps = grid_steps(horizon, cfg.dt, "simulate_path");
  std::optional<TruncatedModel> holder;
  return run_path(effective_spec(spec, cfg, holder), x0, s0, n_steps, cfg, rng);
}

Snapshots simulate_snapshots(const ModelSpec& spec, const Vec& x0, double s0,
                             const std::vector<double>& times, const StepConfig& cfg,
                             const RngStream& rng) {
  cfg.validate();
  Snapshots out;
  if (times.empty()) return out;
  std::vector<std::size_t> index;
  for (double t : times) {
    const double ratio = (t - s0) / cfg.dt;
    const double steps = std::round(ratio);
    if (steps < 0.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
      std::ostringstream msg;
      msg << "snapshot time " << t << " is not on the step grid s0 + i dt (s0 = " << s0
          << ", dt = " << cfg.dt << ")";
      throw InvalidArgument(msg.str());
    }
    if (!index.empty() && static_cast<std::size_t>(steps) < index.back()) {
      throw InvalidArgument("snapshot times must be sorted");
    }
    index.push_back(static_cast<std::size_t>(steps));
  }
  std::optional<TruncatedModel> holder;
  const ModelSpec& eff = effective_spec(spec, cfg, holder);
  Stepper stepper(eff, x0, s0, std::max<std::size_t>(index.back(), 1), cfg, rng);
  auto ignore = [](double, const AppliedJump&) {};
  for (std::size_t target : index) {
    while (stepper.step_index() < target && !stepper.finished()) stepper.step(nullptr, ignore);
    if (stepper.blowup()) {
      out.blowup = stepper.blowup();
      break;
    }
    out.states.push_back(stepper.state());
  }
  return out;
}

Ensemble simulate_ensemble(const ModelSpec& spec, const Vec& x0, double s0, double horizon,
                           const StepConfig& cfg, std::size_t n_paths, std::uint64_t master_seed) {
  if (n_paths == 0) throw InvalidArgument("simulate_ensemble: n_paths must be at least 1");
  cfg.validate();
  spec.validate();
  const std::size_t n_steps = grid_steps(horizon, cfg.dt, "simulate_ensemble");
  std::optional<TruncatedModel> holder;
  const ModelSpec& eff = effective_spec(spec, cfg, holder);
  Ensemble ensemble;
  ensemble.paths.resize(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    ensemble.paths[i] = run_path(eff, x0, s0, n_steps, cfg, RngStream(master_seed, i));
  });
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (ensemble.paths[i].blowup) ensemble.blown_up.push_back(i);
  }
  return ensemble;
}

double PicardReport::max_ratio_from_second() const {
  double worst = 0.0;
  for (std::size_t i = 1; i < ratios.size(); ++i) worst = std::max(worst, ratios[i]);
  return worst;
}

PicardReport picard_validate(const ModelSpec& spec, const Vec& x0, double horizon, int n_iter,
                             const StepConfig& cfg, const RngStream& rng) {
  cfg.validate();
  spec.validate();
  if (n_iter < 1) throw InvalidArgument("picard_validate: n_iter must be positive");
  if (spec.has_large_jumps()) {
    throw InvalidArgument("picard_validate: the model must have no large-jump coefficient (G = 0)");
  }
  const std::size_t n = grid_steps(horizon, cfg.dt, "picard_validate");
  const Compensator comp(spec, cfg.compensator_mode);
  RngStream brownian = rng.substream(streams::kBrownian);
  RngStream small = rng.substream(streams::kSmallJumps);
  std::vector<Vec> dB(n);
  std::vector<std::vector<JumpEvent>> events(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * cfg.dt;
    dB[i] = sample_brownian_increments(spec.k, cfg.dt, brownian);
    if (comp.active()) events[i] = sample_small_jump_events(spec.levy, t, cfg.dt, small, cfg.event_budget);
  }
  std::vector<Vec> prev(n + 1, x0), next(n + 1, x0);
  PicardReport report;
  for (int it = 0; it < n_iter; ++it) {
    Vec acc = x0;
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * cfg.dt;
      const Vec& z = prev[i];
      acc += advance_piece(spec, comp, t, cfg.dt, z, dB[i], events[i], 0, events[i].size(), nullptr,
                           nullptr) -
             z;
      next[i + 1] = acc;
      if (!acc.allFinite()) {
        throw BlowUpError(t, acc, "picard_validate: iterate " + std::to_string(it + 1) + " is not finite");
      }
      dist = std::max(dist, (acc - prev[i + 1]).norm());
    }
    report.distances.push_back(dist);
    std::swap(prev, next);
  }
  int rising = 0;
  for (std::size_t i = 1; i < report.distances.size(); ++i) {
    const double lo = report.distances[i - 1];
    const double hi = report.distances[i];
    report.ratios.push_back(lo > 0.0 ? hi / lo : 0.0);
    rising = hi > lo ? rising + 1 : 0;
    if (rising >= 3) report.diverged = true;
  }
  return report;
}

std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

void write_path_csv_header(std::ostream& out, int m, bool with_path_id) {
  if (with_path_id) out << "path_id,";
  out << 't';
  for (int i = 1; i <= m; ++i) out << ",x_" << i;
  out << ",event_kind,event_norm\n";
}

void write_path_csv_rows(std::ostream& out, const SamplePath& path, std::optional<std::size_t> path_id) {
  for (std::size_t r = 0; r < path.times.size(); ++r) {
    if (path_id) out << *path_id << ',';
    out << format_double(path.times[r]);
    for (Eigen::Index i = 0; i < path.states[r].size(); ++i) out << ',' << format_double(path.states[r](i));
    out << ',' << to_string(path.row_kind[r]) << ',' << format_double(path.row_norm[r]) << '\n';
  }
}

}  // namespace psde
