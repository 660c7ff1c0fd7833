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

#include "flowse/sampling.h"

#include <gtest/gtest.h>
#include <torch/torch.h>

#include <cmath>

namespace flowse {
namespace {

torch::Tensor RandomState(int64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return torch::randn({1, 2, 8, 6}, gen, torch::kDouble);
}

TEST(EulerTest, OracleFieldReachesTargetInOneStep) {
  auto x0 = RandomState(1), x1 = RandomState(2);
  auto out = IntegrateEuler(x0, [&](const torch::Tensor&, double) { return x1 - x0; }, 1);
  EXPECT_LT((out - x1).abs().max().item<double>(), 1e-15);
}

TEST(EulerTest, ConstantFieldIsStepCountInvariant) {
  auto x0 = RandomState(3), c = RandomState(4);
  auto ref = IntegrateEuler(x0, [&](const torch::Tensor&, double) { return c; }, 1);
  for (int n : {2, 4, 30}) {
    auto out = IntegrateEuler(x0, [&](const torch::Tensor&, double) { return c; }, n);
    EXPECT_LT((out - ref).abs().max().item<double>(), 1e-13) << n << " steps";
  }
}

TEST(EulerTest, LinearFieldErrorIsFirstOrder) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(5);
  auto a = 0.5 * torch::randn({3, 3}, gen, torch::kDouble);
  auto x0 = torch::randn({3, 1}, gen, torch::kDouble);
  // exp(A) x0 by a long Taylor series.
  auto exact = x0.clone();
  auto term = x0.clone();
  for (int k = 1; k < 40; ++k) {
    term = torch::matmul(a, term) / k;
    exact = exact + term;
  }
  auto error = [&](int n) {
    auto x = IntegrateEuler(x0, [&](const torch::Tensor& s, double) { return torch::matmul(a, s); },
                            n);
    return (x - exact).norm().item<double>();
  };
  for (int n : {8, 16, 32, 64}) {
    const double ratio = error(n) / error(2 * n);
    EXPECT_GT(ratio, 2.0 * 0.8) << n;
    EXPECT_LT(ratio, 2.0 * 1.2) << n;
  }
}

TEST(EulerTest, ProbeSeesLeftEndpoints) {
  std::vector<double> times;
  IntegrateEuler(RandomState(6), [](const torch::Tensor& x, double) { return x * 0.0; }, 4,
                 [&](int step, double t) {
                   EXPECT_EQ(step, static_cast<int>(times.size()));
                   times.push_back(t);
                 });
  EXPECT_EQ(times, (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
}

TEST(EulerTest, NonFiniteStateReportsStep) {
  try {
    IntegrateEuler(RandomState(7),
                   [](const torch::Tensor& x, double t) {
                     return t >= 0.5 ? x * std::numeric_limits<double>::infinity() : x;
                   },
                   4);
    FAIL() << "expected SamplingError";
  } catch (const SamplingError& e) {
    EXPECT_EQ(e.step(), 2);
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos);
  }
}

TEST(SamplerConfigTest, Validation) {
  SamplerConfig cfg;
  EXPECT_EQ(cfg.n_steps, 1);
  EXPECT_EQ(cfg.prior, PriorMean::kPredictor);
  EXPECT_TRUE(cfg.use_ema);
  EXPECT_DOUBLE_EQ(cfg.sigma.sigma, 0.04);
  cfg.n_steps = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  EXPECT_THROW(SamplerConfig::FromJson({{"n_step", 2}}), ConfigError);
  EXPECT_THROW(SamplerConfig::FromJson({{"prior", "mean"}}), ConfigError);
  auto back = SamplerConfig::FromJson({{"n_steps", 30}, {"prior", "zero"}});
  EXPECT_EQ(back.n_steps, 30);
  EXPECT_EQ(back.prior, PriorMean::kZero);
  EXPECT_EQ(SamplerConfig::FromJson(back.ToJson()).ToJson(), back.ToJson());
}

class UntrainedEnhancerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    spec_.n_train = 1;
    spec_.n_val = 1;
    spec_.n_test = 4;
    spec_.duration_s = 1.0;
    for (int i = 0; i < spec_.n_test; ++i)
      items_.push_back(ToEvalItem(MakeExample(spec_, Split::kTest, i)));
  }
  static Enhancer Make() {
    ModelConfig cfg = ModelConfig::ForVariant(SizeVariant::kSmall, 4);
    return Enhancer(TwoStageModel(cfg, 1));
  }
  CorpusSpec spec_;
  std::vector<EvalItem> items_;
};

TEST_F(UntrainedEnhancerTest, DeterministicPredictorPriorIsIdentity) {
  auto enh = Make();
  SamplerConfig cfg;
  cfg.deterministic = true;
  const auto& item = items_[0];
  auto out = enh.Enhance(item.noisy, item.side_info, cfg);
  ASSERT_EQ(out.size(), item.noisy.size());
  double err = 0.0;
  for (size_t i = 0; i < out.size(); ++i)
    err = std::max(err, std::abs(out.samples[i] - item.noisy.samples[i]));
  EXPECT_LT(err, 1e-4);
}

TEST_F(UntrainedEnhancerTest, ZeroPriorGivesNoise) {
  auto enh = Make();
  SamplerConfig cfg;
  cfg.prior = PriorMean::kZero;
  for (const auto& item : items_) {
    auto out = enh.Enhance(item.noisy, item.side_info, cfg);
    EXPECT_LT(SiSdr(out, item.clean), -20.0);
    // sigma-scaled white noise through synthesis, back at input scale.
    EXPECT_GT(Rms(out), 0.0);
  }
}

TEST_F(UntrainedEnhancerTest, SeededDeterminism) {
  auto enh = Make();
  SamplerConfig cfg;
  cfg.n_steps = 3;
  cfg.seed = 11;
  const auto& item = items_[1];
  auto a = enh.Enhance(item.noisy, item.side_info, cfg);
  auto b = enh.Enhance(item.noisy, item.side_info, cfg);
  EXPECT_EQ(a.samples, b.samples);
  cfg.seed = 12;
  auto c = enh.Enhance(item.noisy, item.side_info, cfg);
  EXPECT_NE(a.samples, c.samples);
}

TEST_F(UntrainedEnhancerTest, RejectsMismatchedSideInfo) {
  auto enh = Make();
  const auto& item = items_[0];
  SideInfo bad = item.side_info;
  bad.frames -= 1;
  bad.values.resize(static_cast<size_t>(bad.frames) * bad.dim);
  EXPECT_THROW(enh.Enhance(item.noisy, bad, SamplerConfig{}), std::invalid_argument);
  TimeSignal broken = item.noisy;
  broken.samples[10] = std::nan("");
  EXPECT_ANY_THROW(enh.Enhance(broken, item.side_info, SamplerConfig{}));
}

TEST_F(UntrainedEnhancerTest, SweepShapesAndTiming) {
  auto enh = Make();
  EvalOptions eo;
  eo.estoi = false;
  auto one = StepsSweep(enh, items_, {1}, SamplerConfig{}, eo);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].n_steps, 1);
  EXPECT_EQ(one[0].si_sdr.n, items_.size());
  auto two = StepsSweep(enh, items_, {1, 30}, SamplerConfig{}, eo);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_GT(two[1].seconds, two[0].seconds);
}

TEST_F(UntrainedEnhancerTest, BothPriorsFinite) {
  auto enh = Make();
  EvalOptions eo;
  eo.estoi = false;
  auto rows = PriorAblation(enh, items_, SamplerConfig{}, eo);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].prior, PriorMean::kPredictor);
  EXPECT_EQ(rows[1].prior, PriorMean::kZero);
  for (const auto& r : rows) EXPECT_TRUE(std::isfinite(r.si_sdr.mean));
  EXPECT_GT(rows[0].si_sdr.mean, rows[1].si_sdr.mean);
}

}  // namespace
}  // namespace flowse
