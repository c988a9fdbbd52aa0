/*
 * Copyright 2026 The pmlab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pmlab/bmod.hpp"

#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "pmlab/errors.hpp"
#include "pmlab/stats.hpp"

namespace pmlab {
namespace {

const double kHalf = 0.5;
const std::span<const double> kX(&kHalf, 1);

GroundTruth Noiseless() {
  GroundTruth t;
  t.noise_sd = 0.0;
  return t;
}

TEST(ComputeIntervention, IdleIsZero) {
  const ModifiedWorld w(GroundTruth::Default());
  for (double yhat : {-1.0, 0.3, 7.0}) {
    const Intervention b =
        ComputeIntervention(InterventionPolicy::Idle(), yhat, kX, 0.2, w.Context(0.1), 1);
    EXPECT_EQ(b.kind, Intervention::Kind::kLevel);
    EXPECT_EQ(b.value, 0.0);
  }
}

TEST(ComputeIntervention, ConstantShift) {
  const ModifiedWorld w(GroundTruth::Default());
  const Intervention b =
      ComputeIntervention(InterventionPolicy::ConstantShift(0.1), 0.3, kX, 0.2, w.Context(), 2);
  EXPECT_EQ(b.value, 0.1);
}

TEST(ComputeIntervention, OracleTargetsMinusBias) {
  const ModifiedWorld w(GroundTruth::Default());
  const Intervention b = ComputeIntervention(InterventionPolicy::OracleCounterBias(), 0.3, kX,
                                             0.2, w.Context(1.0 / 12.0), 3);
  EXPECT_NEAR(b.value, -1.0 / 12.0, 1e-15);
}

TEST(ComputeIntervention, OracleOnGridPicksNearestLevel) {
  const ModifiedWorld w(GroundTruth::Default());
  const Intervention b =
      ComputeIntervention(InterventionPolicy::OracleCounterBiasOnGrid({-0.1, -0.05, 0.0, 0.05, 0.1}),
                          0.3, kX, 0.2, w.Context(1.0 / 12.0), 3);
  EXPECT_DOUBLE_EQ(b.value, -0.1);
}

TEST(ComputeIntervention, OracleWithoutBiasIsConfigError) {
  const ModifiedWorld w(GroundTruth::Default());
  EXPECT_THROW(ComputeIntervention(InterventionPolicy::OracleCounterBias(), 0.3, kX, 0.2,
                                   w.Context(), 4),
               ConfigError);
}

TEST(ComputeIntervention, PolicyNoiseHasConfiguredSpread) {
  const ModifiedWorld w(GroundTruth::Default());
  const auto policy = InterventionPolicy::ConstantShift(0.1, 0.02);
  std::vector<double> levels(20000);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    RandomStream s({5, Purpose::kPolicyNoise, i, 0, 0});
    levels[i] = ComputeIntervention(policy, 0.3, kX, 0.2, w.Context(), s).value;
  }
  EXPECT_NEAR(Mean(levels), 0.1, 4.0 * 0.02 / std::sqrt(20000.0));
  EXPECT_NEAR(std::sqrt(SampleVariance(levels)), 0.02, 0.001);
}

TEST(RealizeModifiedOutcome, FullShrinkagePinsToPrediction) {
  GroundTruth t;
  t.noise_sd = 3.0;
  const ModifiedWorld w(t);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(RealizeModifiedOutcome(w, Intervention::Shrink(1.0), kX, 0.777, seed), 0.777);
  }
}

TEST(RealizeModifiedOutcome, IdleNoiselessIsTrueMean) {
  const ModifiedWorld w(Noiseless());
  EXPECT_EQ(RealizeModifiedOutcome(w, Intervention::Level(0.0), kX, 0.4, 6), 0.25);
}

TEST(RealizeModifiedOutcome, ConstantShiftAddsDose) {
  const ModifiedWorld w(Noiseless());
  EXPECT_NEAR(RealizeModifiedOutcome(w, Intervention::Level(0.1), kX, 0.4, 7), 0.35, 1e-15);

  const ModifiedWorld noisy(GroundTruth::Default());
  std::vector<double> y(10000);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = RealizeModifiedOutcome(noisy, Intervention::Level(0.1), kX, 0.4, 8, i);
  }
  EXPECT_NEAR(Mean(y), 0.35, 3.0 * std::sqrt(SampleVariance(y) / 1e4));
}

TEST(RealizeModifiedOutcome, DoseDependentNoise) {
  GroundTruth t;
  t.dose_response.noise_slope = 4.0;  // m(0.25) = 2
  const ModifiedWorld w(t);
  std::vector<double> y(40000);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = RealizeModifiedOutcome(w, Intervention::Level(0.25), kX, 0.4, 9, i);
  }
  EXPECT_NEAR(std::sqrt(SampleVariance(y)), 0.1, 0.002);
}

TEST(TrueCate, IdleIsExactlyZero) {
  const ModifiedWorld w(GroundTruth::Default());
  const CateEstimate c = TrueCate(w, InterventionPolicy::Idle(), 0.3, kX, 1000, 10);
  EXPECT_EQ(c.monte_carlo.value, 0.0);
  EXPECT_EQ(*c.analytic, 0.0);
}

TEST(TrueCate, ConstantShiftIsDelta) {
  const ModifiedWorld w(GroundTruth::Default());
  const CateEstimate c = TrueCate(w, InterventionPolicy::ConstantShift(0.07), 0.3, kX, 1000, 11);
  EXPECT_EQ(*c.analytic, 0.07);
  EXPECT_NEAR(c.monte_carlo.value, 0.07, 1e-12);
}

TEST(TrueCate, ShrinkagePullsTowardPrediction) {
  const ModifiedWorld w(GroundTruth::Default());
  for (double lambda : {0.25, 0.5, 0.9}) {
    const CateEstimate c =
        TrueCate(w, InterventionPolicy::Shrinkage(lambda), 1.0 / 3.0, kX, 100000, 12);
    EXPECT_NEAR(*c.analytic, lambda / 12.0, 1e-15);
    EXPECT_NEAR(c.monte_carlo.value, lambda / 12.0, 3.0 * c.monte_carlo.se);
  }
}

TEST(TrueCate, RandomSensitivityUsesMean) {
  GroundTruth t;
  t.sensitivity = SensitivityLaw::Uniform(0.5, 1.5);
  const ModifiedWorld w(t);
  const CateEstimate c = TrueCate(w, InterventionPolicy::ConstantShift(0.1), 0.3, kX, 50000, 13);
  EXPECT_NEAR(*c.analytic, 0.1, 1e-15);
  EXPECT_NEAR(c.monte_carlo.value, 0.1, 4.0 * c.monte_carlo.se);
}

AgentConfig AgentCfg() {
  AgentConfig cfg = AgentConfig::Default();
  cfg.horizon_steps = 50;
  cfg.step_noise_sd = 0.01;
  return cfg;
}

TEST(SequentialAgent, CorrectPredictionKeepsActionAtZero) {
  const ModifiedWorld w(GroundTruth::Default());
  int zeros = 0;
  std::vector<double> agent_err, idle_err;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const Trajectory tr = RunSequentialAgent(AgentCfg(), w, 0.25, kX, 20, r);
    zeros += tr.final_intervention == 0.0;
    agent_err.push_back(std::fabs(tr.outcome - 0.25));
    RandomStream zs({20, Purpose::kOutcome, 0, r, 0});
    idle_err.push_back(std::fabs(0.05 * UnitNoise(NoiseLaw::kGaussian, zs)));
  }
  EXPECT_GE(zeros, 180);
  const WelchResult t = WelchTTest(agent_err, idle_err);
  EXPECT_GT(t.p_value, 0.01);
}

TEST(SequentialAgent, ReachesTargetShift) {
  const ModifiedWorld w(GroundTruth::Default());
  std::map<double, int> finals;
  for (std::uint64_t r = 0; r < 200; ++r) {
    ++finals[RunSequentialAgent(AgentCfg(), w, 0.35, kX, 21, r).final_intervention];
  }
  EXPECT_GE(finals[0.1], 180);
}

TEST(SequentialAgent, ExplorationOnlyHorizon) {
  const ModifiedWorld w(GroundTruth::Default());
  AgentConfig cfg = AgentCfg();
  cfg.horizon_steps = 2;
  cfg.explore_steps = 2;
  const Trajectory a = RunSequentialAgent(cfg, w, 0.35, kX, 22, 0);
  const Trajectory b = RunSequentialAgent(cfg, w, 0.35, kX, 22, 0);
  ASSERT_EQ(a.steps.size(), 2u);
  EXPECT_EQ(a.steps[0].action, -0.2);
  EXPECT_EQ(a.steps[1].action, 0.2);
  EXPECT_EQ(a.final_intervention, 0.2);
  EXPECT_EQ(a.outcome, b.outcome);
}

TEST(SequentialAgent, DegenerateGridIsConfigError) {
  const ModifiedWorld w(GroundTruth::Default());
  AgentConfig cfg = AgentCfg();
  cfg.action_grid = {0.0, 0.0, 0.0};
  EXPECT_THROW(RunSequentialAgent(cfg, w, 0.35, kX, 23, 0), ConfigError);
  cfg.action_grid = {0.1, 0.2};
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(InterventionPolicy, Validation) {
  EXPECT_THROW(InterventionPolicy::Shrinkage(1.5).Validate(), ConfigError);
  EXPECT_THROW(InterventionPolicy::Shrinkage(-0.1).Validate(), ConfigError);
  InterventionPolicy p = InterventionPolicy::Shrinkage(0.5);
  p.policy_noise_sd = 0.1;
  EXPECT_THROW(p.Validate(), ConfigError);
  EXPECT_NO_THROW(InterventionPolicy::ConstantShift(0.1, 0.05).Validate());
}

}  // namespace
}  // namespace pmlab
