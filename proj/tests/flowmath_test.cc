// Copyright 2026 The Flowse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flowse/flowmath.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace flowse {
namespace flowmath {
namespace {

TFArray Scalar(double v) { return TFArray({1}, {v}); }

TFArray RandomArray(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  TFArray a(shape);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : a.values()) v = u(rng);
  return a;
}

PathCondition<TFArray> RandomCondition(const Shape& shape, std::mt19937_64& rng) {
  return {RandomArray(shape, rng), RandomArray(shape, rng)};
}

TEST(FlowMapTest, MidpointWithZeroNoise) {
  const auto sched = SimplifiedSchedule<TFArray>({0.04});
  const PathCondition<TFArray> z{Scalar(0.0), Scalar(2.0)};
  EXPECT_DOUBLE_EQ(FlowMap(Scalar(0.0), 0.5, sched, z)[0], 1.0);
}

TEST(FlowMapTest, StartPointAddsSigmaTimesEps) {
  const auto sched = SimplifiedSchedule<TFArray>({0.04});
  const PathCondition<TFArray> z{Scalar(3.0), Scalar(7.0)};
  EXPECT_NEAR(FlowMap(Scalar(1.0), 0.0, sched, z)[0], 3.04, 1e-15);
}

TEST(FlowMapTest, MonteCarloMeanMatchesInterpolation) {
  std::mt19937_64 rng(7);
  const auto z = RandomCondition({4, 4}, rng);
  const SigmaConfig cfg{0.04};
  const auto sched = SimplifiedSchedule<TFArray>(cfg);
  const int draws = 100000;
  TFArray sum({4, 4});
  for (int i = 0; i < draws; ++i)
    sum += FlowMap(StandardNormal({4, 4}, rng), 0.3, sched, z);
  sum *= 1.0 / draws;
  const TFArray expected = 0.7 * z.x0 + 0.3 * z.x1;
  const double band = 3.0 * cfg.sigma / std::sqrt(static_cast<double>(draws));
  for (size_t i = 0; i < sum.size(); ++i)
    EXPECT_NEAR(sum[i], expected[i], band) << "entry " << i;
}

TEST(FlowMapTest, ShapeMismatchNamesOperand) {
  const auto sched = SimplifiedSchedule<TFArray>({0.04});
  const PathCondition<TFArray> z{TFArray({2, 2}), TFArray({2, 2})};
  try {
    FlowMap(TFArray({2, 3}), 0.5, sched, z);
    FAIL() << "expected ShapeMismatchError";
  } catch (const ShapeMismatchError& e) {
    EXPECT_EQ(e.operand(), "eps");
  }
  const PathCondition<TFArray> bad{TFArray({2, 2}), TFArray({3, 2})};
  EXPECT_THROW(bad.Validate(), ShapeMismatchError);
}

TEST(FlowMapTest, RejectsTimeOutsideUnitInterval) {
  const auto sched = SimplifiedSchedule<TFArray>({0.04});
  const PathCondition<TFArray> z{Scalar(0.0), Scalar(1.0)};
  EXPECT_THROW(FlowMap(Scalar(0.0), 1.5, sched, z), DomainError);
  EXPECT_THROW(FlowMap(Scalar(0.0), -0.1, sched, z), DomainError);
}

TEST(FlowMapTest, AffineInNoise) {
  std::mt19937_64 rng(11);
  const auto sched = SimplifiedSchedule<TFArray>({0.04});
  for (int trial = 0; trial < 50; ++trial) {
    const auto z = RandomCondition({3, 5}, rng);
    const double t = std::uniform_real_distribution<double>(0, 1)(rng);
    const double a = std::uniform_real_distribution<double>(-3, 3)(rng);
    const double b = std::uniform_real_distribution<double>(-3, 3)(rng);
    const TFArray e1 = StandardNormal({3, 5}, rng);
    const TFArray e2 = StandardNormal({3, 5}, rng);
    const TFArray lhs = FlowMap(a * e1 + b * e2, t, sched, z);
    const TFArray rhs = a * FlowMap(e1, t, sched, z) + b * FlowMap(e2, t, sched, z) -
                        (a + b - 1.0) * sched.mu(t, z);
    EXPECT_LT(MaxAbsDiff(lhs, rhs), 1e-12);
  }
}

TEST(SamplePathPointTest, DegenerateSigmaReturnsTarget) {
  std::mt19937_64 rng(3);
  const auto z = RandomCondition({8}, rng);
  const TFArray x = SamplePathPoint(1.0, z, {1e-12}, rng);
  EXPECT_LT(MaxAbsDiff(x, z.x1), 1e-9);
}

TEST(SamplePathPointTest, SeededDrawsAreReproducible) {
  std::mt19937_64 setup(5);
  const auto z = RandomCondition({6, 6}, setup);
  std::mt19937_64 a(99), b(99);
  const TFArray xa = SamplePathPoint(0.4, z, {0.04}, a);
  const TFArray xb = SamplePathPoint(0.4, z, {0.04}, b);
  for (size_t i = 0; i < xa.size(); ++i) EXPECT_EQ(xa[i], xb[i]);
}

TEST(SamplePathPointTest, VarianceIsSigmaSquared) {
  std::mt19937_64 rng(21);
  const auto z = RandomCondition({2, 2}, rng);
  const SigmaConfig cfg{0.04};
  const int draws = 100000;
  TFArray sum({2, 2}), sum_sq({2, 2});
  for (int i = 0; i < draws; ++i) {
    const TFArray x = SamplePathPoint(0.6, z, cfg, rng);
    for (size_t k = 0; k < x.size(); ++k) {
      sum[k] += x[k];
      sum_sq[k] += x[k] * x[k];
    }
  }
  for (size_t k = 0; k < sum.size(); ++k) {
    const double mean = sum[k] / draws;
    const double var = sum_sq[k] / draws - mean * mean;
    EXPECT_NEAR(var / (cfg.sigma * cfg.sigma), 1.0, 0.05) << "entry " << k;
  }
}

TEST(SamplePathPointTest, EndpointMeansAreX0AndX1) {
  std::mt19937_64 rng(8);
  const auto z = RandomCondition({3, 3}, rng);
  const SigmaConfig cfg{0.04};
  const int draws = 20000;
  for (double t : {0.0, 1.0}) {
    TFArray sum({3, 3});
    for (int i = 0; i < draws; ++i) sum += SamplePathPoint(t, z, cfg, rng);
    sum *= 1.0 / draws;
    const TFArray& expected = t == 0.0 ? z.x0 : z.x1;
    const double band = 3.0 * cfg.sigma / std::sqrt(static_cast<double>(draws));
    for (size_t k = 0; k < sum.size(); ++k) EXPECT_NEAR(sum[k], expected[k], band);
  }
}

TEST(TargetVectorFieldTest, GeneralReducesToDifferenceUnderSimplifiedPath) {
  std::mt19937_64 rng(42);
  const auto sched = SimplifiedSchedule<TFArray>({0.04});
  for (int trial = 0; trial < 100; ++trial) {
    const auto z = RandomCondition({4, 7}, rng);
    const TFArray x = RandomArray({4, 7}, rng, 5.0);
    const double t = std::uniform_real_distribution<double>(0, 1)(rng);
    const TFArray u = TargetVectorFieldGeneral(x, t, sched, z);
    EXPECT_LT(MaxAbsDiff(u, z.x1 - z.x0), 1e-9);
    EXPECT_LT(MaxAbsDiff(u, TargetVectorFieldSimplified(z)), 1e-9);
  }
}

TEST(TargetVectorFieldTest, GrowingSigmaScheduleBySubstitution) {
  PathSchedule<TFArray> sched;
  sched.mu = [](double, const PathCondition<TFArray>& z) { return TFArray(z.x0.shape()); };
  sched.dmu = sched.mu;
  sched.sigma = [](double t, const PathCondition<TFArray>&) { return 1.0 + t; };
  sched.dsigma = [](double, const PathCondition<TFArray>&) { return 1.0; };
  const PathCondition<TFArray> z{Scalar(0.0), Scalar(0.0)};
  EXPECT_DOUBLE_EQ(TargetVectorFieldGeneral(Scalar(2.0), 0.0, sched, z)[0], 2.0);
}

TEST(TargetVectorFieldTest, OnTheMeanOnlyDmuRemains) {
  std::mt19937_64 rng(4);
  PathSchedule<TFArray> sched;
  sched.mu = [](double t, const PathCondition<TFArray>& z) {
    return z.x0 * std::cos(t) + z.x1 * (t * t);
  };
  sched.dmu = [](double t, const PathCondition<TFArray>& z) {
    return z.x0 * -std::sin(t) + z.x1 * (2.0 * t);
  };
  sched.sigma = [](double t, const PathCondition<TFArray>&) { return 0.5 + t; };
  sched.dsigma = [](double, const PathCondition<TFArray>&) { return 1.0; };
  const auto z = RandomCondition({5}, rng);
  const double t = 0.37;
  const TFArray u = TargetVectorFieldGeneral(sched.mu(t, z), t, sched, z);
  EXPECT_LT(MaxAbsDiff(u, sched.dmu(t, z)), 1e-15);
}

TEST(TargetVectorFieldTest, NonPositiveSigmaIsDomainError) {
  PathSchedule<TFArray> sched = SimplifiedSchedule<TFArray>({0.04});
  sched.sigma = [](double, const PathCondition<TFArray>&) { return 0.0; };
  const PathCondition<TFArray> z{Scalar(0.0), Scalar(1.0)};
  EXPECT_THROW(TargetVectorFieldGeneral(Scalar(0.0), 0.5, sched, z), DomainError);
  EXPECT_THROW(SimplifiedSchedule<TFArray>({0.0}), DomainError);
}

TEST(TargetVectorFieldTest, SimplifiedExamples) {
  const PathCondition<TFArray> z{TFArray({2}, {1.0, 0.0}), TFArray({2}, {0.0, 1.0})};
  const TFArray u = TargetVectorFieldSimplified(z);
  EXPECT_DOUBLE_EQ(u[0], -1.0);
  EXPECT_DOUBLE_EQ(u[1], 1.0);
  const PathCondition<TFArray> same{TFArray({3}, {1, 2, 3}), TFArray({3}, {1, 2, 3})};
  EXPECT_EQ(TargetVectorFieldSimplified(same).MaxAbs(), 0.0);
}

TEST(CfmResidualTest, PerfectFieldIsZero) {
  std::mt19937_64 rng(1);
  const auto z = RandomCondition({3, 3}, rng);
  EXPECT_EQ(CfmRegressionResidual(z.x1 - z.x0, z), 0.0);
}

TEST(CfmResidualTest, MeanReductionOfUnitDifference) {
  const int n = 17;
  const PathCondition<TFArray> z{TFArray({n}, 0.0), TFArray({n}, 1.0)};
  EXPECT_DOUBLE_EQ(CfmRegressionResidual(TFArray({n}, 0.0), z), 1.0);
}

TEST(CfmResidualTest, MatchesScalarLoop) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto z = RandomCondition({2, 6, 5}, rng);
    const TFArray v = RandomArray({2, 6, 5}, rng, 2.0);
    double brute = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - (z.x1[i] - z.x0[i]);
      brute += d * d;
    }
    brute /= static_cast<double>(v.size());
    EXPECT_NEAR(CfmRegressionResidual(v, z), brute, 1e-9);
  }
}

TEST(CfmResidualTest, NonNegativeAndZeroOnlyAtTarget) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto z = RandomCondition({4}, rng);
    TFArray v = z.x1 - z.x0;
    EXPECT_EQ(CfmRegressionResidual(v, z), 0.0);
    v[trial % 4] += 1e-3;
    EXPECT_GT(CfmRegressionResidual(v, z), 0.0);
  }
  const auto z = RandomCondition({4}, rng);
  EXPECT_THROW(CfmRegressionResidual(TFArray({5}), z), ShapeMismatchError);
}

}  // namespace
}  // namespace flowmath
}  // namespace flowse
