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

#include "psde/levy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace psde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// int_a^b r^(-1-p) dr
double power_integral(double p, double a, double b) {
  if (!(a < b)) return 0.0;
  if (std::abs(p) < 1e-14) return std::log(b / a);
  const double upper = std::isinf(b) ? 0.0 : std::pow(b, -p);
  return (std::pow(a, -p) - upper) / p;
}

struct RadialBounds {
  double lo;
  double hi;
};

RadialBounds effective_bounds(const RadialPart& part, Region region, double cutoff) {
  if (region == Region::small) {
    return {std::max(part.r_lo, cutoff), std::min(part.r_hi, 1.0)};
  }
  return {std::max(part.r_lo, 1.0), part.r_hi};
}

bool atom_in_region(const Vec& mark, Region region, double cutoff) {
  const double r = mark.norm();
  return region == Region::small ? (r >= cutoff && r < 1.0 && r > 0.0) : r >= 1.0;
}

double part_mass(const MeasurePart& part, Region region, double cutoff) {
  if (const auto* atoms = std::get_if<AtomicPart>(&part)) {
    double total = 0.0;
    for (std::size_t i = 0; i < atoms->marks.size(); ++i) {
      if (atom_in_region(atoms->marks[i], region, cutoff)) total += atoms->masses[i];
    }
    return total;
  }
  if (const auto* radial = std::get_if<RadialPart>(&part)) {
    const auto [lo, hi] = effective_bounds(*radial, region, cutoff);
    if (lo == 0.0) return radial->exponent < 0.0 ? radial->coeff * power_integral(radial->exponent, 0.0, hi) : kInf;
    return radial->coeff * power_integral(radial->exponent, lo, hi);
  }
  return 0.0;
}

Vec first_moment(const MeasurePart& part, int dim, Region region, double cutoff) {
  Vec total = Vec::Zero(dim);
  if (const auto* atoms = std::get_if<AtomicPart>(&part)) {
    for (std::size_t i = 0; i < atoms->marks.size(); ++i) {
      if (atom_in_region(atoms->marks[i], region, cutoff)) total += atoms->masses[i] * atoms->marks[i];
    }
  } else if (const auto* radial = std::get_if<RadialPart>(&part)) {
    const auto [lo, hi] = effective_bounds(*radial, region, cutoff);
    if (std::isinf(hi) && radial->exponent <= 1.0) {
      throw InvalidArgument("first moment of the large-jump part diverges (tail exponent <= 1)");
    }
    // Isotropic: the mean mark vanishes.
    (void)lo;
  }
  return total;
}

Vec uniform_direction(int dim, RngStream& rng) {
  Vec d(dim);
  if (dim == 1) {
    d(0) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return d;
  }
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) d(i) = rng.normal();
    norm = d.norm();
  } while (norm < 1e-300);
  return d / norm;
}

double sample_radius(const RadialPart& part, double lo, double hi, RngStream& rng) {
  const double u = rng.uniform();
  const double p = part.exponent;
  if (std::abs(p) < 1e-14) return lo * std::pow(hi / lo, u);
  const double a = std::pow(lo, -p);
  const double b = std::isinf(hi) ? 0.0 : std::pow(hi, -p);
  const double r = std::pow(a - u * (a - b), -1.0 / p);
  return std::clamp(r, lo, std::nextafter(hi, 0.0));
}

Vec sample_part(const MeasurePart& part, int dim, Region region, double cutoff, RngStream& rng) {
  if (const auto* atoms = std::get_if<AtomicPart>(&part)) {
    const double total = part_mass(part, region, cutoff);
    double target = rng.uniform() * total;
    std::size_t last_valid = 0;
    for (std::size_t i = 0; i < atoms->marks.size(); ++i) {
      if (!atom_in_region(atoms->marks[i], region, cutoff)) continue;
      last_valid = i;
      target -= atoms->masses[i];
      if (target < 0.0) return atoms->marks[i];
    }
    return atoms->marks[last_valid];
  }
  if (const auto* radial = std::get_if<RadialPart>(&part)) {
    const auto [lo, hi] = effective_bounds(*radial, region, cutoff);
    return sample_radius(*radial, lo, hi, rng) * uniform_direction(dim, rng);
  }
  throw InvalidArgument("sample_mark: empty measure part");
}

void check_finite(double value, const Vec& u) {
  if (!std::isfinite(value)) {
    throw NumericalError("levy_integral: quadrature failure, non-finite integrand at u = " +
                         format_vec(u));
  }
}

IntegralResult integrate_radial(const RadialPart& part, int dim, RadialBounds bounds,
                                const std::function<double(const Vec&)>& f) {
  if (!(bounds.lo < bounds.hi) || part.coeff == 0.0) return {};
  const double p = part.exponent;
  if (dim >= 3) {
    // Monte Carlo with a fixed seed so repeated calls agree exactly.
    const double mass = part.coeff * power_integral(p, bounds.lo, bounds.hi);
    RngStream rng(0x1e5eedull, static_cast<std::uint64_t>(dim), streams::kAnalysis);
    constexpr int kSamples = 1 << 15;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const Vec u = sample_radius(part, bounds.lo, bounds.hi, rng) * uniform_direction(dim, rng);
      const double v = f(u);
      check_finite(v, u);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / kSamples;
    const double var = std::max(0.0, sum_sq / kSamples - mean * mean);
    return {mass * mean, mass * std::sqrt(var / kSamples)};
  }

  auto angular_mean = [&](double r) -> double {
    Vec u(dim);
    if (dim == 1) {
      u(0) = r;
      const double plus = f(u);
      check_finite(plus, u);
      u(0) = -r;
      const double minus = f(u);
      check_finite(minus, u);
      return 0.5 * (plus + minus);
    }
    // Periodic trapezoid rule, doubled until it settles.
    auto trapezoid = [&](int n) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / n;
        u(0) = r * std::cos(phi);
        u(1) = r * std::sin(phi);
        const double v = f(u);
        check_finite(v, u);
        s += v;
      }
      return s / n;
    };
    double previous = trapezoid(16);
    for (int n = 32; n <= 1024; n *= 2) {
      const double current = trapezoid(n);
      if (std::abs(current - previous) <= 1e-13 * (1.0 + std::abs(current))) return current;
      previous = current;
    }
    return previous;
  };

  auto integrand = [&](double r) { return part.coeff * std::pow(r, -1.0 - p) * angular_mean(r); };
  double error = 0.0;
  double value = 0.0;
  if (std::isinf(bounds.hi)) {
    value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, bounds.lo, kInf,
                                                                         15, 1e-12, &error);
  } else {
    // Integrate in log r: the power-law weight becomes a smooth exponential.
    auto in_log = [&](double s) {
      const double r = std::exp(s);
      return integrand(r) * r;
    };
    value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        in_log, std::log(bounds.lo), std::log(bounds.hi), 15, 1e-13, &error);
  }
  if (!std::isfinite(value)) throw NumericalError("levy_integral: quadrature diverged");
  return {value, std::abs(error)};
}

}  // namespace

RadialPart RadialPart::with_mass(double mass, double exponent, double r_lo, double r_hi) {
  const double unit = power_integral(exponent, r_lo, r_hi);
  if (!(unit > 0.0) || !std::isfinite(unit)) {
    throw InvalidArgument("RadialPart::with_mass: radial profile has no finite positive mass");
  }
  return {mass / unit, exponent, r_lo, r_hi};
}

double unit_sphere_area(int l) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * l) / std::tgamma(0.5 * l);
}

LevyMeasureSpec LevyMeasureSpec::none(int dim) {
  LevyMeasureSpec spec;
  spec.dim = dim;
  return spec;
}

LevyMeasureSpec LevyMeasureSpec::stable_like(int dim, double alpha, double c, double delta) {
  LevyMeasureSpec spec;
  spec.dim = dim;
  spec.small = RadialPart{c * unit_sphere_area(dim), alpha, 0.0, 1.0};
  spec.small_cutoff = delta;
  return spec;
}

double LevyMeasureSpec::large_rate() const { return part_mass(large, Region::large, 0.0); }

double LevyMeasureSpec::small_rate() const { return part_mass(small, Region::small, small_cutoff); }

double LevyMeasureSpec::small_remainder_second_moment() const {
  if (const auto* atoms = std::get_if<AtomicPart>(&small)) {
    double total = 0.0;
    for (std::size_t i = 0; i < atoms->marks.size(); ++i) {
      const double r = atoms->marks[i].norm();
      if (r < small_cutoff) total += atoms->masses[i] * r * r;
    }
    return total;
  }
  if (const auto* radial = std::get_if<RadialPart>(&small)) {
    const double hi = std::min(small_cutoff, radial->r_hi);
    if (!(radial->r_lo < hi)) return 0.0;
    // int r^2 r^(-1-p) dr = int r^(-1-(p-2)) dr
    if (radial->r_lo == 0.0) {
      const double q = 2.0 - radial->exponent;
      return radial->coeff * std::pow(hi, q) / q;
    }
    return radial->coeff * power_integral(radial->exponent - 2.0, radial->r_lo, hi);
  }
  return 0.0;
}

Vec LevyMeasureSpec::small_first_moment() const {
  return first_moment(small, dim, Region::small, small_cutoff);
}

Vec LevyMeasureSpec::large_first_moment() const {
  return first_moment(large, dim, Region::large, 0.0);
}

bool LevyMeasureSpec::has_small() const { return small_rate() > 0.0; }
bool LevyMeasureSpec::has_large() const { return large_rate() > 0.0; }

void LevyMeasureSpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("levy: mark dimension out of range");
  if (!(small_cutoff >= 0.0 && small_cutoff <= 1.0)) {
    throw InvalidArgument("levy.delta must lie in [0, 1]");
  }
  auto check_atoms = [&](const AtomicPart& atoms, Region region) {
    if (atoms.marks.size() != atoms.masses.size()) {
      throw InvalidArgument("levy: atom marks and masses differ in length");
    }
    for (std::size_t i = 0; i < atoms.marks.size(); ++i) {
      const double r = atoms.marks[i].size() == dim ? atoms.marks[i].norm() : -1.0;
      if (r < 0.0) throw InvalidArgument("levy: atom mark has wrong dimension");
      if (!(atoms.masses[i] >= 0.0) || !std::isfinite(atoms.masses[i])) {
        throw InvalidArgument("levy: atom masses must be finite and non-negative");
      }
      if (region == Region::small && !(r > 0.0 && r < 1.0)) {
        throw InvalidArgument("levy: small-jump atoms must satisfy 0 < |u| < 1");
      }
      if (region == Region::large && r < 1.0) {
        throw InvalidArgument("levy: large-jump atoms must satisfy |u| >= 1");
      }
    }
  };
  if (const auto* atoms = std::get_if<AtomicPart>(&small)) check_atoms(*atoms, Region::small);
  if (const auto* atoms = std::get_if<AtomicPart>(&large)) check_atoms(*atoms, Region::large);
  if (const auto* radial = std::get_if<RadialPart>(&small)) {
    if (!(radial->coeff >= 0.0) || radial->r_lo < 0.0 || radial->r_hi > 1.0 ||
        !(radial->r_lo < radial->r_hi)) {
      throw InvalidArgument("levy: small radial part must live in [r_lo, r_hi) within (0, 1)");
    }
    if (radial->r_lo == 0.0 && radial->exponent >= 2.0) {
      throw InvalidArgument("levy: small part is not square integrable (need alpha < 2)");
    }
    if (!std::isfinite(small_rate())) {
      throw InvalidArgument(
          "levy: truncated small part has infinite mass; levy.delta = 0 is only allowed for "
          "finite small parts");
    }
  }
  if (const auto* radial = std::get_if<RadialPart>(&large)) {
    if (!(radial->coeff >= 0.0) || radial->r_lo < 1.0 || !(radial->r_lo < radial->r_hi)) {
      throw InvalidArgument("levy: large radial part must live in [r_lo, r_hi) with r_lo >= 1");
    }
    if (std::isinf(radial->r_hi) && radial->exponent <= 0.0) {
      throw InvalidArgument("levy: unbounded large part needs a positive tail exponent");
    }
  }
  const double lambda = large_rate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("levy: large-jump rate must be finite and non-negative");
  }
}

Vec sample_brownian_increments(int k, double dt, RngStream& rng) {
  if (!(dt > 0.0)) throw InvalidArgument("sample_brownian_increments: dt must be positive");
  if (k < 1 || k > kMaxDim) throw InvalidArgument("sample_brownian_increments: bad dimension");
  const double scale = std::sqrt(dt);
  Vec db(k);
  for (int j = 0; j < k; ++j) db(j) = scale * rng.normal();
  return db;
}

Vec sample_mark(const MeasurePart& part, int dim, double cutoff, RngStream& rng) {
  // Decide the region from where the part lives.
  Region region = Region::small;
  if (const auto* radial = std::get_if<RadialPart>(&part)) {
    region = radial->r_lo >= 1.0 ? Region::large : Region::small;
  } else if (const auto* atoms = std::get_if<AtomicPart>(&part)) {
    region = !atoms->marks.empty() && atoms->marks.front().norm() >= 1.0 ? Region::large
                                                                          : Region::small;
  }
  return sample_part(part, dim, region, cutoff, rng);
}

std::vector<JumpEvent> sample_large_jump_events(const LevyMeasureSpec& levy, double t0,
                                                double horizon, RngStream& rng) {
  if (!(horizon > 0.0)) throw InvalidArgument("sample_large_jump_events: horizon must be positive");
  std::vector<JumpEvent> events;
  const double lambda = levy.large_rate();
  if (lambda == 0.0) return events;
  const double end = t0 + horizon;
  double t = t0;
  for (;;) {
    double next = t + rng.exponential(lambda);
    if (next <= t) next = std::nextafter(t, kInf);
    if (next > end) break;
    t = next;
    events.push_back({t, sample_part(levy.large, levy.dim, Region::large, 0.0, rng), JumpKind::large});
  }
  return events;
}

std::vector<JumpEvent> sample_small_jump_events(const LevyMeasureSpec& levy, double t, double dt,
                                                RngStream& rng, std::size_t event_budget) {
  if (!(dt > 0.0)) throw InvalidArgument("sample_small_jump_events: dt must be positive");
  std::vector<JumpEvent> events;
  const double rate = levy.small_rate();
  if (rate == 0.0) return events;
  const double mean = rate * dt;
  auto budget_error = [&](double count) {
    std::ostringstream msg;
    msg << "small-jump batch of " << count << " events exceeds the per-step budget of "
        << event_budget << "; increase levy.delta or decrease sim.dt";
    return BudgetExceeded(msg.str());
  };
  if (mean > static_cast<double>(event_budget)) throw budget_error(mean);
  const std::uint64_t n = rng.poisson(mean);
  if (n > event_budget) throw budget_error(static_cast<double>(n));
  events.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double when = t + dt * rng.uniform();
    events.push_back({when, sample_part(levy.small, levy.dim, Region::small, levy.small_cutoff, rng),
                      JumpKind::small});
  }
  std::sort(events.begin(), events.end(),
            [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; });
  return events;
}

IntegralResult levy_integral(const LevyMeasureSpec& levy, const std::function<double(const Vec&)>& f,
                             Region region) {
  const MeasurePart& part = region == Region::small ? levy.small : levy.large;
  const double cutoff = region == Region::small ? levy.small_cutoff : 0.0;
  if (const auto* atoms = std::get_if<AtomicPart>(&part)) {
    IntegralResult result;
    for (std::size_t i = 0; i < atoms->marks.size(); ++i) {
      if (!atom_in_region(atoms->marks[i], region, cutoff)) continue;
      const double v = f(atoms->marks[i]);
      check_finite(v, atoms->marks[i]);
      result.value += atoms->masses[i] * v;
    }
    return result;
  }
  if (const auto* radial = std::get_if<RadialPart>(&part)) {
    return integrate_radial(*radial, levy.dim, effective_bounds(*radial, region, cutoff), f);
  }
  return {};
}

std::string format_vec(const Vec& v) {
  std::ostringstream out;
  out.precision(17);
  out << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    out << v(i);
  }
  out << ')';
  return out.str();
}

}  // namespace psde
