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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "psde/lawlab.hpp"
#include "psde/model.hpp"

namespace psde {
namespace {

Params params(std::map<std::string, std::string> raw) { return Params(std::move(raw)); }

constexpr double kTwoPi = 2 * std::numbers::pi;

// Periodic mean of m' = -a m + c cos(w t).
double periodic_mean(double a, double c, double w, double t) {
  return c * (a * std::cos(w * t) + w * std::sin(w * t)) / (a * a + w * w);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

StepConfig step(double dt) {
  StepConfig cfg;
  cfg.dt = dt;
  cfg.record_events = false;
  return cfg;
}

TEST(EstimateLaw, FrozenCloudIsPointMass) {
  const ModelSpec spec = builtin("frozen", params({{"dim", "2"}}));
  const Vec x0 = make_vec({1.5, -2});
  const EmpiricalMeasure mu = estimate_law(spec, x0, 0.0, 1.0, 50, step(0.1), 1);
  ASSERT_EQ(mu.size(), 50u);
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    EXPECT_EQ(mu.samples[i], x0);
    total += mu.weights[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NO_THROW(mu.validate());
}

TEST(EstimateLaw, PeriodicOuMeanAndVariance) {
  const double a = 1, c = 1, w = kTwoPi, x0 = 5, t = 10;
  const ModelSpec spec = builtin("periodic_ou", Params());
  const std::size_t n = 20000;
  const EmpiricalMeasure mu = estimate_law(spec, make_vec({x0}), 0.0, t, n, step(1e-3), 11);
  const double mean_exact = std::exp(-a * t) * (x0 - periodic_mean(a, c, w, 0)) + periodic_mean(a, c, w, t);
  const double var_exact = (1 - std::exp(-2 * a * t)) / (2 * a);
  const double mean = mu.mean()(0), var = mu.covariance()(0, 0);
  EXPECT_LT(std::abs(mean - mean_exact), 4 * std::sqrt(var / n));
  EXPECT_LT(std::abs(var - var_exact), 4 * var_exact * std::sqrt(2.0 / n));
}

TEST(EstimateLaw, SameSeedSameCloud) {
  const ModelSpec spec = builtin("lorenz", Params());
  const auto a = estimate_law(spec, make_vec({1, 1, 1}), 0.0, 0.2, 30, step(0.005), 4);
  const auto b = estimate_law(spec, make_vec({1, 1, 1}), 0.0, 0.2, 30, step(0.005), 4);
  EXPECT_EQ(a.samples, b.samples);
}

TEST(EstimateLaw, TooManyBlowUpsRaiseWithPartialCloud) {
  ModelSpec spec = builtin("periodic_ou", params({{"a", "0"}, {"c", "0"}}));
  spec.drift = [](double, const Vec& x) -> Vec { return x.array().cube(); };
  spec.drift_jacobian = nullptr;
  try {
    (void)estimate_law(spec, make_vec({0.5}), 0.0, 5.0, 200, step(0.01), 1);
    FAIL();
  } catch (const LawEstimateError& e) {
    EXPECT_LT(e.partial_cloud.size(), 200u);
  }
}

TEST(Wasserstein1d, SortedDifferenceOracle) {
  RngStream rng(3, 0);
  std::vector<double> a(500), b(500), w(500, 1.0 / 500);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = 2 * rng.uniform();
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double oracle = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) oracle += std::abs(sa[i] - sb[i]) / 500;
  EXPECT_NEAR(wasserstein1_1d(a, w, b, w), oracle, 1e-12);
}

EmpiricalMeasure point(double x) { return EmpiricalMeasure::uniform({make_vec({x})}); }

TEST(LawDistance, IdenticalMeasuresGiveZero) {
  RngStream rng(1, 0);
  std::vector<Vec> s;
  for (int i = 0; i < 100; ++i) s.push_back(make_vec({rng.normal(), rng.normal()}));
  const auto mu = EmpiricalMeasure::uniform(s);
  RngStream r1(2, 0), r2(2, 0);
  EXPECT_EQ(law_distance(mu, mu, LawMetric::sliced_wasserstein1, r1).value, 0.0);
  EXPECT_NEAR(law_distance(mu, mu, LawMetric::energy, r2).value, 0.0, 1e-12);
}

TEST(LawDistance, PointMassesIn1d) {
  RngStream rng(1, 0);
  EXPECT_DOUBLE_EQ(law_distance(point(0.5), point(-1.75), LawMetric::sliced_wasserstein1, rng).value, 2.25);
  EXPECT_DOUBLE_EQ(law_distance(point(0.5), point(-1.75), LawMetric::energy, rng).value, 2 * 2.25);
}

TEST(LawDistance, SameLawNullCalibration) {
  RngStream ga(100, 0), gb(200, 0);
  std::vector<Vec> a, b;
  for (int i = 0; i < 10000; ++i) {
    a.push_back(make_vec({ga.normal(), ga.normal()}));
    b.push_back(make_vec({gb.normal(), gb.normal()}));
  }
  RngStream rng(5, 0);
  const auto r = law_distance(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b),
                              LawMetric::sliced_wasserstein1, rng);
  EXPECT_LE(r.value, 0.05);
  EXPECT_GT(r.std_error, 0.0);
  EXPECT_EQ(r.n_projections, 64u);
}

TEST(LawDistance, ShiftedGaussians) {
  // W1 between N(0,1) and N(d,1) is d along every direction of the shift;
  // for a 1-d cloud sliced W1 equals it directly.
  RngStream g(9, 0);
  std::vector<Vec> a, b;
  for (int i = 0; i < 20000; ++i) {
    const double z = g.normal();
    a.push_back(make_vec({z}));
    b.push_back(make_vec({g.normal() + 0.7}));
  }
  RngStream rng(5, 0);
  const auto r = law_distance(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b),
                              LawMetric::sliced_wasserstein1, rng);
  EXPECT_NEAR(r.value, 0.7, 4 * r.std_error + 0.02);
}

TEST(Periodicity, FrozenDistancesVanish) {
  const ModelSpec spec = builtin("frozen", Params());
  const auto r = periodicity_test(spec, make_vec({1.0}), 0.0, 4, 200, step(0.1), 1);
  ASSERT_EQ(r.d.size(), 4u);
  for (const auto& d : r.d) EXPECT_EQ(d.value, 0.0);
  EXPECT_EQ(r.first_in_band, 0u);
}

TEST(Periodicity, OuSettlesIntoNullBand) {
  const ModelSpec spec = builtin("periodic_ou", Params());
  const std::size_t k_max = 10;
  const auto r = periodicity_test(spec, make_vec({5.0}), 0.0, k_max, 4000, step(0.01), 21);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_GT(r.d[k].value, r.d[k + 1].value) << k;
  for (std::size_t k = 8; k < k_max; ++k) {
    const double band = r.null[k].value + 3 * std::hypot(r.d[k].std_error, r.null[k].std_error);
    EXPECT_LE(r.d[k].value, band) << k;
    EXPECT_TRUE(r.in_band[k]);
  }
  EXPECT_LE(r.settled_from, 8u);
}

TEST(Cesaro, ConstantFunctionAveragesToOne) {
  const ModelSpec spec = builtin("periodic_ou", Params());
  const auto r = cesaro_average(spec, [](const Vec&) { return 1.0; }, 0.0, make_vec({0.0}), 5, 100, step(0.01), 1);
  for (double a : r.average) EXPECT_EQ(a, 1.0);
}

TEST(Cesaro, BoundedByPhiSup) {
  const ModelSpec spec = builtin("lorenz", Params());
  const auto r = cesaro_average(spec, [](const Vec& x) { return std::tanh(x(0)); }, 0.0, make_vec({1, 1, 1}), 5, 200,
                                step(0.005), 2);
  for (double a : r.average) EXPECT_LE(std::abs(a), 1.0);
}

TEST(Cesaro, PeriodicOuMean) {
  const ModelSpec spec = builtin("periodic_ou", Params());
  const auto r = cesaro_average(spec, [](const Vec& x) { return x(0); }, 0.0, make_vec({0.0}), 50, 10000,
                                step(1e-3), 5);
  const double target = 1.0 / (1.0 + 4 * std::numbers::pi * std::numbers::pi);
  EXPECT_NEAR(target, 0.02470, 5e-6);
  EXPECT_LT(std::abs(r.average.back() - target), 4 * r.std_error.back())
      << r.average.back() << " +- " << r.std_error.back();
}

TEST(Wilson, MatchesClosedForm) {
  const double z = 1.959964;
  for (auto [hits, n] : std::vector<std::pair<std::size_t, std::size_t>>{{0, 100}, {7, 50}, {50, 50}}) {
    const double p = static_cast<double>(hits) / n, nn = static_cast<double>(n);
    const double centre = (p + z * z / (2 * nn)) / (1 + z * z / nn);
    const double half = z / (1 + z * z / nn) * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn));
    const auto [lo, hi] = wilson_interval(hits, n);
    EXPECT_NEAR(lo, hits == 0 ? 0.0 : centre - half, 1e-12);
    EXPECT_NEAR(hi, centre + half, 1e-12);
  }
  EXPECT_EQ(wilson_interval(0, 100).first, 0.0);
}

TEST(Irreducibility, HugeBallAlwaysHit) {
  const ModelSpec spec = builtin("periodic_ou", Params());
  const auto r = irreducibility_probe(spec, make_vec({0.3}), 0.0, make_vec({0.3}), 1e6, 2.0, 300, step(0.01), 1);
  EXPECT_EQ(r.hits, 300u);
  EXPECT_EQ(r.estimate, 1.0);
  EXPECT_TRUE(r.evidence);
}

TEST(Irreducibility, GaussianBallProbability) {
  const double a = 1, c = 1, w = kTwoPi, t = 1;
  const ModelSpec spec = builtin("periodic_ou", Params());
  const std::size_t n = 20000;
  const auto r = irreducibility_probe(spec, make_vec({0.0}), 0.0, make_vec({2.0}), 0.5, t, n, step(1e-3), 8);
  const double mean = std::exp(-a * t) * (0 - periodic_mean(a, c, w, 0)) + periodic_mean(a, c, w, t);
  const double sd = std::sqrt((1 - std::exp(-2 * a * t)) / (2 * a));
  const double p = normal_cdf((2.5 - mean) / sd) - normal_cdf((1.5 - mean) / sd);
  EXPECT_LT(std::abs(r.estimate - p), 3 * std::sqrt(p * (1 - p) / n)) << r.estimate << " vs " << p;
  EXPECT_TRUE(r.evidence);
}

TEST(Irreducibility, DegenerateNoiseGivesNoEvidence) {
  const ModelSpec spec = builtin("periodic_ou", params({{"sigma", "0"}, {"c", "0"}}));
  const auto r = irreducibility_probe(spec, make_vec({0.0}), 0.0, make_vec({3.0}), 0.5, 1.0, 500, step(0.01), 1);
  EXPECT_EQ(r.hits, 0u);
  EXPECT_EQ(r.ci_low, 0.0);
  EXPECT_FALSE(r.evidence);
  EXPECT_STREQ(r.verdict(), "no evidence");
}

TEST(MeasureCsv, Format) {
  const auto mu = EmpiricalMeasure::uniform({make_vec({1, 2}), make_vec({3, 4})});
  std::ostringstream out;
  write_measure_csv(out, mu);
  EXPECT_EQ(out.str(), "path_id,x_1,x_2,weight\n0,1,2,0.5\n1,3,4,0.5\n");
}

}  // namespace
}  // namespace psde
