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

#include "psde/lawlab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "psde/parallel.hpp"

namespace psde {
namespace {

// Snapshots of n_paths continuing paths; clouds[k][i] is path i at times[k].
struct Clouds {
  std::vector<std::vector<Vec>> states;
  std::vector<char> blown;
  std::size_t blowups = 0;
};

Clouds simulate_clouds(const ModelSpec& spec, const Vec& x0, double s, const std::vector<double>& times,
                       std::size_t n_paths, const StepConfig& cfg, std::uint64_t master_seed) {
  if (n_paths == 0) throw InvalidArgument("n_paths must be at least 1");
  cfg.validate();
  spec.validate();
  std::optional<TruncatedModel> holder;
  const ModelSpec* eff = &spec;
  StepConfig inner = cfg;
  if (cfg.truncation_radius) {
    holder.emplace(spec, *cfg.truncation_radius);
    eff = &holder->spec();
    inner.truncation_radius.reset();
  }
  Clouds clouds;
  clouds.states.assign(times.size(), std::vector<Vec>(n_paths));
  clouds.blown.assign(n_paths, 0);
  parallel_for(n_paths, [&](std::size_t i) {
    const Snapshots snap = simulate_snapshots(*eff, x0, s, times, inner, RngStream(master_seed, i));
    if (snap.blowup) clouds.blown[i] = 1;
    for (std::size_t k = 0; k < snap.states.size(); ++k) clouds.states[k][i] = snap.states[k];
  });
  clouds.blowups = static_cast<std::size_t>(std::count(clouds.blown.begin(), clouds.blown.end(), 1));
  return clouds;
}

std::vector<Vec> finite_subset(const std::vector<Vec>& states, const std::vector<char>& blown, std::size_t lo,
                               std::size_t hi) {
  std::vector<Vec> out;
  out.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    if (!blown[i]) out.push_back(states[i]);
  }
  return out;
}

void check_blowup_fraction(std::size_t blowups, std::size_t n_paths, const char* what,
                           const EmpiricalMeasure& partial) {
  if (static_cast<double>(blowups) > 0.01 * static_cast<double>(n_paths)) {
    std::ostringstream msg;
    msg << what << ": " << blowups << " of " << n_paths << " paths blew up (more than 1%)";
    throw LawEstimateError(msg.str(), partial);
  }
}

struct Projected {
  std::vector<double> values;        // sorted
  std::vector<std::uint32_t> order;  // original index of each sorted value
};

Projected project_sorted(const std::vector<Vec>& samples, const Vec& dir) {
  const std::size_t n = samples.size();
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = samples[i].dot(dir);
  Projected p;
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), 0u);
  std::stable_sort(p.order.begin(), p.order.end(), [&](std::uint32_t a, std::uint32_t b) { return raw[a] < raw[b]; });
  p.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.values[i] = raw[p.order[i]];
  return p;
}

// Integral of |F - G| for presorted values with weights given per original
// index (weights of each side sum to one).
double w1_sorted(const Projected& a, const std::vector<double>& wa, const Projected& b,
                 const std::vector<double>& wb) {
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, total = 0.0;
  const std::size_t na = a.values.size(), nb = b.values.size();
  double prev = std::min(a.values.front(), b.values.front());
  while (i < na || j < nb) {
    const bool take_a = j >= nb || (i < na && a.values[i] <= b.values[j]);
    const double x = take_a ? a.values[i] : b.values[j];
    total += std::abs(fa - fb) * (x - prev);
    prev = x;
    if (take_a) {
      fa += wa[a.order[i++]];
    } else {
      fb += wb[b.order[j++]];
    }
  }
  return total;
}

Vec random_direction(int m, RngStream& rng) {
  Vec d(m);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int i = 0; i < m; ++i) d(i) = rng.normal();
    norm = d.norm();
  }
  return d / norm;
}

// Multinomial resample of a weighted cloud, returned as new weights.
std::vector<double> resample_weights(const std::vector<double>& w, RngStream& rng) {
  const std::size_t n = w.size();
  std::vector<double> out(n, 0.0);
  const double inc = 1.0 / static_cast<double>(n);
  bool uniform = true;
  for (double v : w) uniform = uniform && v == w.front();
  if (uniform) {
    for (std::size_t k = 0; k < n; ++k) out[rng.below(n)] += inc;
    return out;
  }
  std::vector<double> cdf(n);
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    out[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), n - 1)] += inc;
  }
  return out;
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::size_t> even_subsample(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  const std::size_t k = std::min(n, cap);
  for (std::size_t i = 0; i < k; ++i) idx.push_back(i * n / k);
  return idx;
}

double energy_from(const std::vector<double>& dxy, const std::vector<double>& dxx, const std::vector<double>& dyy,
                   const std::vector<double>& wx, const std::vector<double>& wy) {
  const std::size_t nx = wx.size(), ny = wy.size();
  double exy = 0.0, exx = 0.0, eyy = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    if (wx[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < ny; ++j) row += wy[j] * dxy[i * ny + j];
    exy += wx[i] * row;
    double rowx = 0.0;
    for (std::size_t j = 0; j < nx; ++j) rowx += wx[j] * dxx[i * nx + j];
    exx += wx[i] * rowx;
  }
  for (std::size_t i = 0; i < ny; ++i) {
    if (wy[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < ny; ++j) row += wy[j] * dyy[i * ny + j];
    eyy += wy[i] * row;
  }
  return 2.0 * exy - exx - eyy;
}

LawDistanceReport energy_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, RngStream& rng,
                                  const LawDistanceOptions& options) {
  const auto ix = even_subsample(mu.size(), options.energy_max_points);
  const auto iy = even_subsample(nu.size(), options.energy_max_points);
  auto weights = [](const EmpiricalMeasure& m, const std::vector<std::size_t>& idx) {
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t i : idx) total += m.weights[i];
    for (std::size_t i : idx) w.push_back(m.weights[i] / total);
    return w;
  };
  const std::vector<double> wx = weights(mu, ix), wy = weights(nu, iy);
  const std::size_t nx = ix.size(), ny = iy.size();
  std::vector<double> dxy(nx * ny), dxx(nx * nx), dyy(ny * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) dxy[i * ny + j] = (mu.samples[ix[i]] - nu.samples[iy[j]]).norm();
    for (std::size_t j = 0; j < nx; ++j) dxx[i * nx + j] = (mu.samples[ix[i]] - mu.samples[ix[j]]).norm();
  }
  for (std::size_t i = 0; i < ny; ++i) {
    for (std::size_t j = 0; j < ny; ++j) dyy[i * ny + j] = (nu.samples[iy[i]] - nu.samples[iy[j]]).norm();
  }
  LawDistanceReport report;
  report.metric = LawMetric::energy;
  report.value = std::max(0.0, energy_from(dxy, dxx, dyy, wx, wy));
  if (&mu == &nu) report.value = 0.0;
  const std::uint64_t boot_seed = rng();
  std::vector<double> boot(options.bootstrap);
  parallel_for(options.bootstrap, [&](std::size_t b) {
    RngStream r(boot_seed, b);
    boot[b] = energy_from(dxy, dxx, dyy, resample_weights(wx, r), resample_weights(wy, r));
  });
  report.std_error = sample_stddev(boot);
  return report;
}

}  // namespace

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<Vec> samples, MeasureMeta meta) {
  EmpiricalMeasure m;
  m.weights.assign(samples.size(), samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size()));
  m.samples = std::move(samples);
  m.meta = std::move(meta);
  return m;
}

Vec EmpiricalMeasure::mean() const {
  Vec acc = Vec::Zero(dim());
  for (std::size_t i = 0; i < samples.size(); ++i) acc += weights[i] * samples[i];
  return acc;
}

Mat EmpiricalMeasure::covariance() const {
  const Vec mu = mean();
  Mat acc = Mat::Zero(dim(), dim());
  double w2 = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vec d = samples[i] - mu;
    acc += weights[i] * d * d.transpose();
    w2 += weights[i] * weights[i];
  }
  return acc / (1.0 - w2);
}

void EmpiricalMeasure::validate() const {
  if (samples.size() != weights.size()) throw InvalidArgument("empirical measure: weights/samples size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw InvalidArgument("empirical measure: negative weight");
    if (!samples[i].allFinite()) throw InvalidArgument("empirical measure: non-finite sample " + std::to_string(i));
    total += weights[i];
  }
  if (!samples.empty() && std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("empirical measure: weights do not sum to 1");
  }
}

EmpiricalMeasure estimate_law(const ModelSpec& spec, const Vec& x0, double s, double t, std::size_t n_paths,
                              const StepConfig& cfg, std::uint64_t master_seed) {
  if (!(t > s)) throw InvalidArgument("estimate_law: need t > s");
  const Clouds clouds = simulate_clouds(spec, x0, s, {t}, n_paths, cfg, master_seed);
  MeasureMeta meta{s, x0, t, spec.name, n_paths, master_seed};
  EmpiricalMeasure cloud = EmpiricalMeasure::uniform(finite_subset(clouds.states[0], clouds.blown, 0, n_paths), meta);
  check_blowup_fraction(clouds.blowups, n_paths, "estimate_law", cloud);
  return cloud;
}

const char* to_string(LawMetric metric) {
  return metric == LawMetric::energy ? "energy" : "sliced_wasserstein1";
}

LawMetric parse_law_metric(const std::string& name) {
  if (name == "sliced_wasserstein1") return LawMetric::sliced_wasserstein1;
  if (name == "energy") return LawMetric::energy;
  throw InvalidArgument("unknown law metric '" + name + "' (expected sliced_wasserstein1 or energy)");
}

double wasserstein1_1d(const std::vector<double>& a, const std::vector<double>& wa, const std::vector<double>& b,
                       const std::vector<double>& wb) {
  if (a.empty() || b.empty()) throw InvalidArgument("wasserstein1_1d: empty sample");
  std::vector<Vec> sa, sb;
  for (double v : a) sa.push_back(make_vec({v}));
  for (double v : b) sb.push_back(make_vec({v}));
  const Vec dir = make_vec({1.0});
  return w1_sorted(project_sorted(sa, dir), wa, project_sorted(sb, dir), wb);
}

LawDistanceReport law_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, LawMetric metric,
                               RngStream& rng, const LawDistanceOptions& options) {
  if (mu.size() == 0 || nu.size() == 0) throw InvalidArgument("law_distance: empty cloud");
  if (mu.dim() != nu.dim()) {
    throw InvalidArgument("law_distance: dimension mismatch (" + std::to_string(mu.dim()) + " vs " +
                          std::to_string(nu.dim()) + ")");
  }
  if (metric == LawMetric::energy) return energy_distance(mu, nu, rng, options);
  if (options.n_projections == 0) throw InvalidArgument("law_distance: n_projections must be positive");

  const std::size_t n_proj = options.n_projections;
  std::vector<Vec> dirs;
  for (std::size_t p = 0; p < n_proj; ++p) dirs.push_back(random_direction(mu.dim(), rng));
  const std::uint64_t boot_seed = rng();
  std::vector<Projected> pa(n_proj), pb(n_proj);
  std::vector<double> per_dir(n_proj);
  parallel_for(n_proj, [&](std::size_t p) {
    pa[p] = project_sorted(mu.samples, dirs[p]);
    pb[p] = project_sorted(nu.samples, dirs[p]);
    per_dir[p] = w1_sorted(pa[p], mu.weights, pb[p], nu.weights);
  });
  LawDistanceReport report;
  report.metric = metric;
  report.n_projections = n_proj;
  report.value = std::accumulate(per_dir.begin(), per_dir.end(), 0.0) / static_cast<double>(n_proj);
  std::vector<double> boot(options.bootstrap);
  parallel_for(options.bootstrap, [&](std::size_t b) {
    RngStream r(boot_seed, b);
    const std::vector<double> wa = resample_weights(mu.weights, r);
    const std::vector<double> wb = resample_weights(nu.weights, r);
    double acc = 0.0;
    for (std::size_t p = 0; p < n_proj; ++p) acc += w1_sorted(pa[p], wa, pb[p], wb);
    boot[b] = acc / static_cast<double>(n_proj);
  });
  report.std_error = sample_stddev(boot);
  return report;
}

LawPeriodicityReport periodicity_test(const ModelSpec& spec, const Vec& x0, double s, std::size_t k_max,
                                    std::size_t n_paths, const StepConfig& cfg, std::uint64_t master_seed,
                                    const PeriodicityOptions& options) {
  if (k_max < 2) throw InvalidArgument("periodicity_test: k_max must be at least 2");
  if (n_paths < 4) throw InvalidArgument("periodicity_test: need at least 4 paths");
  LawPeriodicityReport report;
  for (std::size_t k = 0; k <= k_max; ++k) report.times.push_back(s + static_cast<double>(k) * spec.theta);
  const Clouds clouds = simulate_clouds(spec, x0, s, report.times, n_paths, cfg, master_seed);
  report.blowups = clouds.blowups;
  const std::size_t half = n_paths / 2;
  auto cloud = [&](std::size_t k, bool first_half) {
    return EmpiricalMeasure::uniform(first_half ? finite_subset(clouds.states[k], clouds.blown, 0, half)
                                                : finite_subset(clouds.states[k], clouds.blown, half, n_paths));
  };
  check_blowup_fraction(clouds.blowups, n_paths, "periodicity_test", cloud(k_max, true));
  for (std::size_t k = 0; k < k_max; ++k) {
    const EmpiricalMeasure a_now = cloud(k, true);
    const EmpiricalMeasure a_next = cloud(k + 1, true);
    const EmpiricalMeasure b_next = cloud(k + 1, false);
    RngStream rd(master_seed, k, streams::kAnalysis);
    RngStream rn(master_seed, k, streams::kAnalysis);
    report.d.push_back(law_distance(a_now, b_next, options.metric, rd, options.distance));
    report.null.push_back(law_distance(a_next, b_next, options.metric, rn, options.distance));
    const double band = report.null.back().value +
                        options.band_sigmas * std::hypot(report.d.back().std_error, report.null.back().std_error);
    report.in_band.push_back(report.d.back().value <= band);
  }
  report.first_in_band = k_max;
  for (std::size_t k = 0; k < k_max; ++k) {
    if (report.in_band[k]) {
      report.first_in_band = k;
      break;
    }
  }
  report.settled_from = k_max;
  for (std::size_t k = k_max; k > 0 && report.in_band[k - 1]; --k) report.settled_from = k - 1;
  std::size_t run = 0;
  for (bool b : report.in_band) {
    run = b ? run + 1 : 0;
    report.longest_run = std::max(report.longest_run, run);
  }
  return report;
}

CesaroReport cesaro_average(const ModelSpec& spec, const std::function<double(const Vec&)>& phi, double s,
                            const Vec& x0, std::size_t n, std::size_t n_paths, const StepConfig& cfg,
                            std::uint64_t master_seed) {
  if (n < 1) throw InvalidArgument("cesaro_average: n must be at least 1");
  if (n_paths < 2) throw InvalidArgument("cesaro_average: need at least two paths");
  CesaroReport report;
  for (std::size_t j = 1; j <= n; ++j) report.times.push_back(s + static_cast<double>(j) * spec.theta);
  const Clouds clouds = simulate_clouds(spec, x0, s, report.times, n_paths, cfg, master_seed);
  report.blowups = clouds.blowups;
  check_blowup_fraction(clouds.blowups, n_paths, "cesaro_average",
                        EmpiricalMeasure::uniform(finite_subset(clouds.states[n - 1], clouds.blown, 0, n_paths)));
  std::vector<double> running(n_paths, 0.0);
  const double count = static_cast<double>(n_paths - clouds.blowups);
  for (std::size_t j = 0; j < n; ++j) {
    double sum_p = 0.0, sum_p2 = 0.0, sum_a = 0.0, sum_a2 = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (clouds.blown[i]) continue;
      const double v = phi(clouds.states[j][i]);
      running[i] += v;
      const double avg = running[i] / static_cast<double>(j + 1);
      sum_p += v;
      sum_p2 += v * v;
      sum_a += avg;
      sum_a2 += avg * avg;
    }
    auto se = [count](double s1, double s2) {
      const double mean = s1 / count;
      return std::sqrt(std::max(0.0, (s2 / count - mean * mean) * count / (count - 1.0)) / count);
    };
    report.period_mean.push_back(sum_p / count);
    report.period_stderr.push_back(se(sum_p, sum_p2));
    report.average.push_back(sum_a / count);
    report.std_error.push_back(se(sum_a, sum_a2));
  }
  return report;
}

std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  const double lo = hits == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = hits == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

IrreducibilityReport irreducibility_probe(const ModelSpec& spec, const Vec& x0, double s, const Vec& y, double a,
                                          double horizon, std::size_t n_paths, const StepConfig& cfg,
                                          std::uint64_t master_seed) {
  if (!(a > 0.0)) throw InvalidArgument("irreducibility_probe: ball radius must be positive");
  if (!(horizon > 0.0)) throw InvalidArgument("irreducibility_probe: T must be positive");
  if (y.size() != spec.m) throw InvalidArgument("irreducibility_probe: target has the wrong dimension");
  const Clouds clouds = simulate_clouds(spec, x0, s, {s + horizon}, n_paths, cfg, master_seed);
  IrreducibilityReport report;
  report.n_paths = n_paths;
  report.blowups = clouds.blowups;
  check_blowup_fraction(clouds.blowups, n_paths, "irreducibility_probe",
                        EmpiricalMeasure::uniform(finite_subset(clouds.states[0], clouds.blown, 0, n_paths)));
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (!clouds.blown[i] && (clouds.states[0][i] - y).norm() < a) ++report.hits;
  }
  report.estimate = static_cast<double>(report.hits) / static_cast<double>(n_paths);
  std::tie(report.ci_low, report.ci_high) = wilson_interval(report.hits, n_paths);
  report.evidence = report.ci_low > 0.0;
  return report;
}

void write_measure_csv(std::ostream& out, const EmpiricalMeasure& measure) {
  out << "path_id";
  for (int i = 1; i <= measure.dim(); ++i) out << ",x_" << i;
  out << ",weight\n";
  for (std::size_t p = 0; p < measure.size(); ++p) {
    out << p;
    for (Eigen::Index i = 0; i < measure.samples[p].size(); ++i) out << ',' << format_double(measure.samples[p](i));
    out << ',' << format_double(measure.weights[p]) << '\n';
  }
}

void write_periodicity_csv(std::ostream& out, const LawPeriodicityReport& report) {
  out << "k,t,d_k,se_d,null_k,se_null,in_band\n";
  for (std::size_t k = 0; k < report.d.size(); ++k) {
    out << k << ',' << format_double(report.times[k]) << ',' << format_double(report.d[k].value) << ','
        << format_double(report.d[k].std_error) << ',' << format_double(report.null[k].value) << ','
        << format_double(report.null[k].std_error) << ',' << (report.in_band[k] ? 1 : 0) << '\n';
  }
}

void write_cesaro_csv(std::ostream& out, const CesaroReport& report) {
  out << "j,t,period_mean,period_stderr,average,stderr\n";
  for (std::size_t j = 0; j < report.average.size(); ++j) {
    out << j + 1 << ',' << format_double(report.times[j]) << ',' << format_double(report.period_mean[j]) << ','
        << format_double(report.period_stderr[j]) << ',' << format_double(report.average[j]) << ','
        << format_double(report.std_error[j]) << '\n';
  }
}

}  // namespace psde
