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

#include <cstddef>
#include <functional>
#include <variant>
#include <vector>

#include "psde/rng.hpp"
#include "psde/types.hpp"

namespace psde {

/// Finitely many marks with non-negative masses.
struct AtomicPart {
  std::vector<Vec> marks;
  std::vector<double> masses;
};

/// Isotropic measure whose radial marginal has density
/// coeff * r^(-1-exponent) dr on [r_lo, r_hi), direction uniform on the sphere.
///
/// For an alpha-stable-like small part in dimension l with Lebesgue density
/// c|u|^(-l-alpha), coeff = c * |S^(l-1)| and exponent = alpha. r_hi may be
/// +infinity when exponent > 0.
struct RadialPart {
  double coeff = 0.0;
  double exponent = 0.0;
  double r_lo = 0.0;
  double r_hi = 1.0;

  /// Radial part with the given total mass on [r_lo, r_hi).
  static RadialPart with_mass(double mass, double exponent, double r_lo, double r_hi);
};

using MeasurePart = std::variant<std::monostate, AtomicPart, RadialPart>;

enum class Region { small, large };
enum class JumpKind { small, large };

/// Levy measure nu on R^l minus the origin, split at |u| = 1.
///
/// Small jumps with |u| < small_cutoff are discarded by the simulator; the
/// neglected second moment is available from small_remainder_second_moment().
struct LevyMeasureSpec {
  int dim = 1;
  MeasurePart small;
  MeasurePart large;
  double small_cutoff = 0.0;

  static LevyMeasureSpec none(int dim = 1);
  /// Symmetric density c|u|^(-l-alpha) on 0 < |u| < 1, truncated at delta.
  static LevyMeasureSpec stable_like(int dim, double alpha, double c, double delta = 1e-2);

  /// Total large-jump intensity lambda = nu(|u| >= 1).
  double large_rate() const;
  /// Intensity of the truncated small part, nu(delta <= |u| < 1).
  double small_rate() const;
  /// Second moment of the discarded region, int_{|u|<delta} |u|^2 nu(du).
  double small_remainder_second_moment() const;
  /// int u nu(du) over the truncated small part (zero for isotropic parts).
  Vec small_first_moment() const;
  /// int u nu(du) over the large part (may be infinite for heavy tails).
  Vec large_first_moment() const;
  bool has_small() const;
  bool has_large() const;

  /// Throws InvalidArgument when the parts violate the Levy-measure
  /// invariants (finite lambda, finite truncated mass, marks on the right
  /// side of |u| = 1, square-integrable small part).
  void validate() const;
};

struct JumpEvent {
  double time = 0.0;
  Vec mark;
  JumpKind kind = JumpKind::small;
};

/// k independent N(0, dt) draws.
Vec sample_brownian_increments(int k, double dt, RngStream& rng);

/// Poisson event times of rate lambda on (t0, t0 + horizon], strictly
/// increasing, with i.i.d. marks from nu restricted to |u| >= 1.
std::vector<JumpEvent> sample_large_jump_events(const LevyMeasureSpec& levy, double t0,
                                                double horizon, RngStream& rng);

/// Compound-Poisson batch of truncated small jumps on [t, t + dt). Throws
/// BudgetExceeded when the expected or realized count exceeds event_budget.
std::vector<JumpEvent> sample_small_jump_events(const LevyMeasureSpec& levy, double t, double dt,
                                                RngStream& rng, std::size_t event_budget);

/// One mark drawn from the normalized part.
Vec sample_mark(const MeasurePart& part, int dim, double cutoff, RngStream& rng);

struct IntegralResult {
  double value = 0.0;
  double error = 0.0;
};

/// int_region f(u) nu(du), over delta <= |u| < 1 for the small region.
///
/// Atomic parts are summed exactly. Radial parts use adaptive Gauss-Kronrod
/// in r (l = 1, averaging over u and -u), nested with a periodic trapezoid
/// rule in the angle (l = 2), or Monte Carlo with a fixed internal seed and
/// reported standard error (l >= 3). Throws NumericalError if f returns a
/// non-finite value.
IntegralResult levy_integral(const LevyMeasureSpec& levy, const std::function<double(const Vec&)>& f,
                             Region region);

/// Surface area of the unit sphere in R^l.
double unit_sphere_area(int l);

}  // namespace psde
