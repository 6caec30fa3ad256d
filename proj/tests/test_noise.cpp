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

#include <cmath>
#include <limits>
#include <vector>

#include "psde/levy.hpp"
#include "psde/rng.hpp"

namespace psde {
namespace {

TEST(RngStream, ReplayIsBitIdentical) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
  RngStream c(42, 7, streams::kBrownian), d(42, 7, streams::kBrownian);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(RngStream, DistinctStreamsAreUncorrelated) {
  RngStream a(42, 0), b(42, 1);
  const int n = 200000;
  double sab = 0.0;
  int equal = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform() - 0.5, y = b.uniform() - 0.5;
    sab += x * y;
    equal += x == y;
  }
  // Var(xy) = 1/144 for independent uniforms.
  EXPECT_LT(std::abs(sab / n), 4.0 * std::sqrt(1.0 / 144.0 / n));
  EXPECT_EQ(equal, 0);
}

TEST(RngStream, SubstreamsDiffer) {
  const RngStream base(3, 9);
  RngStream s0 = base.substream(0), s1 = base.substream(1);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += s0() == s1();
  EXPECT_EQ(same, 0);
}

TEST(RngStream, UniformStaysInOpenInterval) {
  RngStream r(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, PoissonMean) {
  RngStream r(5, 0);
  const int n = 100000;
  for (double mean : {0.3, 4.0, 60.0}) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(r.poisson(mean));
    EXPECT_NEAR(sum / n, mean, 4.0 * std::sqrt(mean / n)) << "mean " << mean;
  }
}

TEST(BrownianIncrements, VanishingStepDegenerates) {
  RngStream r(1, 0);
  for (double dt : {1e-8, 1e-16, 1e-24}) {
    const Vec d = sample_brownian_increments(3, dt, r);
    ASSERT_EQ(d.size(), 3);
    EXPECT_LT(d.norm(), 10 * std::sqrt(dt));
  }
  EXPECT_THROW((void)sample_brownian_increments(3, 0.0, r), InvalidArgument);
}

TEST(BrownianIncrements, MomentsMatchN0dt) {
  RngStream r(2024, 0);
  const int n = 1000000;
  const double dt = 0.01;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = sample_brownian_increments(1, dt, r)(0);
  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= n;
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= (n - 1);
  EXPECT_LT(std::abs(mean), 4.0 * (0.1 / 1e3));
  EXPECT_LT(std::abs(var - dt) / dt, 0.01);
}

TEST(BrownianIncrements, SameStreamSameSequence) {
  RngStream a(8, 3), b(8, 3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(sample_brownian_increments(2, 0.1, a), sample_brownian_increments(2, 0.1, b));
}

LevyMeasureSpec atom_large(double rate, const Vec& mark) {
  LevyMeasureSpec levy = LevyMeasureSpec::none(static_cast<int>(mark.size()));
  levy.large = AtomicPart{{mark}, {rate}};
  return levy;
}

TEST(LargeJumps, ZeroRateGivesNoEvents) {
  RngStream r(1, 0);
  EXPECT_TRUE(sample_large_jump_events(LevyMeasureSpec::none(1), 0.0, 5.0, r).empty());
}

TEST(LargeJumps, MeanCountIsRateTimesHorizon) {
  const LevyMeasureSpec levy = atom_large(2.0, make_vec({1.5}));
  const int runs = 100000;
  double total = 0.0;
  for (int i = 0; i < runs; ++i) {
    RngStream r(77, static_cast<std::uint64_t>(i));
    total += static_cast<double>(sample_large_jump_events(levy, 0.0, 5.0, r).size());
  }
  EXPECT_LT(std::abs(total / runs - 10.0) / 10.0, 0.01);
}

TEST(LargeJumps, TimesIncreaseAndMarksAreLarge) {
  LevyMeasureSpec levy = LevyMeasureSpec::none(2);
  levy.large = RadialPart::with_mass(3.0, 1.5, 1.0, std::numeric_limits<double>::infinity());
  for (int i = 0; i < 200; ++i) {
    RngStream r(5, static_cast<std::uint64_t>(i));
    const auto events = sample_large_jump_events(levy, 1.0, 4.0, r);
    for (std::size_t j = 0; j < events.size(); ++j) {
      EXPECT_GE(events[j].mark.norm(), 1.0);
      EXPECT_GT(events[j].time, 1.0);
      EXPECT_LE(events[j].time, 5.0);
      EXPECT_EQ(events[j].kind, JumpKind::large);
      if (j > 0) EXPECT_GT(events[j].time, events[j - 1].time);
    }
  }
}

TEST(SmallJumps, EmptySmallPartGivesNoEvents) {
  RngStream r(1, 0);
  EXPECT_TRUE(sample_small_jump_events(LevyMeasureSpec::none(1), 0.0, 0.1, r, 1000).empty());
}

TEST(SmallJumps, MeanCountOfFiniteSmallPart) {
  LevyMeasureSpec levy = LevyMeasureSpec::none(1);
  levy.small = RadialPart::with_mass(3.0, 0.5, 0.2, 1.0);
  ASSERT_NEAR(levy.small_rate(), 3.0, 1e-12);
  const int batches = 100000;
  RngStream r(11, 0);
  double total = 0.0;
  for (int i = 0; i < batches; ++i) total += static_cast<double>(sample_small_jump_events(levy, 0.0, 0.1, r, 1000).size());
  EXPECT_LT(std::abs(total / batches - 0.3) / 0.3, 0.02);
}

TEST(SmallJumps, MarksStayInAnnulus) {
  const LevyMeasureSpec levy = LevyMeasureSpec::stable_like(2, 1.2, 1.0, 0.05);
  RngStream r(13, 0);
  std::size_t seen = 0;
  for (int i = 0; i < 2000; ++i) {
    for (const auto& e : sample_small_jump_events(levy, 0.0, 0.01, r, 100000)) {
      ++seen;
      EXPECT_GE(e.mark.norm(), 0.05);
      EXPECT_LT(e.mark.norm(), 1.0);
      EXPECT_EQ(e.kind, JumpKind::small);
    }
  }
  EXPECT_GT(seen, 0u);
}

TEST(SmallJumps, BudgetExceededNamesTheFix) {
  const LevyMeasureSpec levy = LevyMeasureSpec::stable_like(1, 1.9, 1.0, 1e-6);
  RngStream r(1, 0);
  try {
    (void)sample_small_jump_events(levy, 0.0, 0.1, r, 100);
    FAIL() << "expected BudgetExceeded";
  } catch (const BudgetExceeded& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("delta"), std::string::npos) << what;
    EXPECT_NE(what.find("dt"), std::string::npos) << what;
  }
}

TEST(LevyIntegral, ZeroFunctionGivesZero) {
  const LevyMeasureSpec levy = LevyMeasureSpec::stable_like(1, 1.0, 1.0, 0.01);
  const auto r = levy_integral(levy, [](const Vec&) { return 0.0; }, Region::small);
  EXPECT_EQ(r.value, 0.0);
}

TEST(LevyIntegral, OneOnLargeRegionIsRate) {
  LevyMeasureSpec levy = LevyMeasureSpec::none(1);
  levy.large = RadialPart::with_mass(2.5, 2.0, 1.0, std::numeric_limits<double>::infinity());
  const auto r = levy_integral(levy, [](const Vec&) { return 1.0; }, Region::large);
  EXPECT_NEAR(r.value, 2.5, 1e-10);
  EXPECT_NEAR(levy.large_rate(), 2.5, 1e-12);
}

TEST(LevyIntegral, SecondMomentOfStableSmallPart) {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const double c = 0.7, delta = 0.01;
    const LevyMeasureSpec levy = LevyMeasureSpec::stable_like(1, alpha, c, delta);
    const auto r = levy_integral(levy, [](const Vec& u) { return u(0) * u(0); }, Region::small);
    // int_{delta <= |u| < 1} u^2 c |u|^(-1-alpha) du over both signs.
    const double exact = 2.0 * c * (1.0 - std::pow(delta, 2.0 - alpha)) / (2.0 - alpha);
    EXPECT_NEAR(r.value, exact, 1e-8) << "alpha " << alpha;
  }
}

TEST(LevyIntegral, RemainderSecondMoment) {
  const double alpha = 1.2, c = 1.0, delta = 0.02;
  const LevyMeasureSpec levy = LevyMeasureSpec::stable_like(1, alpha, c, delta);
  const double exact = 2.0 * c * std::pow(delta, 2.0 - alpha) / (2.0 - alpha);
  EXPECT_NEAR(levy.small_remainder_second_moment(), exact, 1e-12);
}

TEST(LevyMeasureSpec, ValidateRejectsBadParts) {
  LevyMeasureSpec levy = LevyMeasureSpec::none(1);
  levy.large = AtomicPart{{make_vec({0.5})}, {1.0}};
  EXPECT_THROW(levy.validate(), InvalidArgument);
  levy.large = AtomicPart{{make_vec({2.0})}, {-1.0}};
  EXPECT_THROW(levy.validate(), InvalidArgument);
  levy.large = AtomicPart{{make_vec({2.0})}, {1.0}};
  EXPECT_NO_THROW(levy.validate());
}

}  // namespace
}  // namespace psde
