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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psde/levy.hpp"
#include "psde/model.hpp"
#include "psde/rng.hpp"

namespace psde {

enum class CompensatorMode { quadrature, per_event };

struct StepConfig {
  double dt = 1e-3;
  CompensatorMode compensator_mode = CompensatorMode::quadrature;
  std::optional<double> truncation_radius;
  std::size_t event_budget = 100000;
  /// Grid rows are kept every record_every steps (the reporting spacing is
  /// record_every * dt).
  std::size_t record_every = 1;
  /// Keep the list of applied jump events; ensembles used only for their
  /// terminal law switch this off to save memory.
  bool record_events = true;
  /// A state whose norm exceeds this bound counts as a blow-up.
  double blowup_bound = 1e12;

  void validate() const;
};

enum class RowKind { none, small, large };
const char* to_string(RowKind kind);

struct AppliedJump {
  JumpEvent event;
  Vec displacement;
};

struct PathExit {
  double time = 0.0;
  Vec state;
};

struct PathBlowUp {
  double time = 0.0;
  Vec state;
  std::string reason;
};

/// One trajectory on the grid s0 + i dt (every record_every-th point) plus a
/// row at every large-jump time holding the post-jump state. Grid rows are
/// tagged small when small jumps occurred since the previous row; row_norm is
/// the norm of the summed jump displacement belonging to the row.
struct SamplePath {
  double s0 = 0.0;
  Vec x0;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<RowKind> row_kind;
  std::vector<double> row_norm;
  std::vector<AppliedJump> events;
  /// First time |x| >= truncation radius (only with a truncation radius).
  std::optional<PathExit> exited;
  /// Set when the path stopped early; the last row is the offending state.
  std::optional<PathBlowUp> blowup;

  const Vec& terminal() const { return states.back(); }
};

/// Drift-plus-compensator evaluation shared by the steppers. Caches the
/// moments of the truncated small part so affine-in-u jump coefficients get
/// a closed-form compensator.
class Compensator {
 public:
  Compensator(const ModelSpec& spec, CompensatorMode mode);
  /// int_{delta <= |u| < 1} H(t, x, u) nu(du).
  Vec operator()(double t, const Vec& x) const;
  bool active() const { return active_; }

 private:
  const ModelSpec* spec_;
  CompensatorMode mode_;
  bool active_ = false;
  double rate_ = 0.0;
  Vec first_moment_;
};

/// One Euler-Maruyama step of the small-jump equation from (t, x): draws the
/// Brownian increment, then the small-jump batch on [t, t + dt), from rng.
/// Throws BlowUpError carrying (t, x) if the result is non-finite.
Vec euler_step(const ModelSpec& spec, double t, const Vec& x, const StepConfig& cfg, RngStream& rng);

/// Euler path of the full equation: large-jump times on (s0, s0 + T] are
/// sampled up front and merged into the grid, and x <- x + G(tau, x-, mark)
/// is applied at each of them. Steps that contain a large-jump time are
/// split using a Brownian bridge, so the grid-level Brownian increments do
/// not depend on the jumps. Noise sources use separate substreams of rng.
/// T must be a multiple of dt.
SamplePath simulate_path(const ModelSpec& spec, const Vec& x0, double s0, double horizon,
                         const StepConfig& cfg, const RngStream& rng);

/// States at the requested times (which must lie on the step grid, sorted),
/// using the same noise as simulate_path with the same stream.
struct Snapshots {
  std::vector<Vec> states;  // one per requested time; empty tail after a blow-up
  std::optional<PathBlowUp> blowup;
};
Snapshots simulate_snapshots(const ModelSpec& spec, const Vec& x0, double s0,
                             const std::vector<double>& times, const StepConfig& cfg,
                             const RngStream& rng);

struct Ensemble {
  std::vector<SamplePath> paths;
  std::vector<std::size_t> blown_up;  // indices of paths with a blow-up record
};

/// Path i uses RngStream(master_seed, i); independent of the thread count.
Ensemble simulate_ensemble(const ModelSpec& spec, const Vec& x0, double s0, double horizon,
                           const StepConfig& cfg, std::size_t n_paths, std::uint64_t master_seed);

struct PicardReport {
  std::vector<double> distances;  // d_1 .. d_n
  std::vector<double> ratios;     // d_{i+1} / d_i, i = 1 .. n-1 (0 when d_i = 0)
  bool diverged = false;          // three consecutive increases
  /// max ratio over i >= 2 (0 when fewer than three iterates).
  double max_ratio_from_second() const;
};

/// Picard iterates of the small-jump equation on the grid of cfg.dt over
/// [0, T] with the noise (Brownian increments and small-jump batches) drawn
/// once and shared by every iterate; Z_0 is constant x0.
PicardReport picard_validate(const ModelSpec& spec, const Vec& x0, double horizon, int n_iter,
                             const StepConfig& cfg, const RngStream& rng);

/// Path CSV: t,x_1..x_m,event_kind,event_norm (with a leading path_id column
/// when path_id is set).
void write_path_csv_header(std::ostream& out, int m, bool with_path_id);
void write_path_csv_rows(std::ostream& out, const SamplePath& path,
                         std::optional<std::size_t> path_id = std::nullopt);

/// Shortest round-trip decimal form used in every CSV the library writes.
std::string format_double(double v);

}  // namespace psde
