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

#include "pmlab/worldgen.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pmlab/errors.hpp"
#include "pmlab/stats.hpp"

namespace pmlab {
namespace {

constexpr double kZeroBias = 0.21132486540518713;  // root of x^2 - x + 1/6

GroundTruth Noiseless() {
  GroundTruth t;
  t.noise_sd = 0.0;
  return t;
}

TEST(SamplePopulation, ZeroNoiseAtPointMass) {
  GroundTruth t = Noiseless();
  t.feature_law = FeatureLaw::Uniform({0.5}, {0.5});
  const PopulationSample s = SamplePopulation(t, 100, 1);
  for (std::size_t i = 0; i < s.n(); ++i) {
    EXPECT_DOUBLE_EQ(s.X(static_cast<Eigen::Index>(i), 0), 0.5);
    EXPECT_DOUBLE_EQ(s.y[static_cast<Eigen::Index>(i)], 0.25);
  }
}

TEST(SamplePopulation, Deterministic) {
  const GroundTruth t = GroundTruth::Default();
  const PopulationSample a = SamplePopulation(t, 1000, 42);
  const PopulationSample b = SamplePopulation(t, 1000, 42);
  EXPECT_EQ(a.ids, b.ids);
  EXPECT_TRUE(a.X == b.X);
  EXPECT_TRUE(a.y == b.y);
  EXPECT_EQ(a.seed_manifest, b.seed_manifest);
  const PopulationSample c = SamplePopulation(t, 1000, 43);
  EXPECT_FALSE(a.y == c.y);
}

TEST(SamplePopulation, MeanOfSquareIsOneThird) {
  const GroundTruth t = GroundTruth::Default();
  const PopulationSample s = SamplePopulation(t, 1000000, 7);
  std::vector<double> y(s.y.data(), s.y.data() + s.y.size());
  const double sd = std::sqrt(SampleVariance(y));
  EXPECT_NEAR(Mean(y), 1.0 / 3.0, 3.0 * sd / std::sqrt(1e6));
}

TEST(SamplePopulation, GaussianFeatureLawMoments) {
  GroundTruth t;
  t.true_fn = Polynomial(2, {{1.0, {1, 0}}});
  t.feature_law = FeatureLaw::Gaussian({1.0, -1.0}, {{1.0, 0.5}, {0.5, 2.0}});
  const PopulationSample s = SamplePopulation(t, 200000, 3);
  const Eigen::Vector2d mean = s.X.colwise().mean();
  EXPECT_NEAR(mean(0), 1.0, 0.02);
  EXPECT_NEAR(mean(1), -1.0, 0.02);
  const Eigen::MatrixXd c = s.X.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = c.transpose() * c / double(s.n() - 1);
  EXPECT_NEAR(cov(0, 0), 1.0, 0.02);
  EXPECT_NEAR(cov(0, 1), 0.5, 0.02);
  EXPECT_NEAR(cov(1, 1), 2.0, 0.04);
}

TEST(FeatureLaw, RejectsInvalidParameters) {
  EXPECT_THROW(FeatureLaw::Gaussian({0.0}, {{-1.0}}), ConfigError);
  EXPECT_THROW(FeatureLaw::Gaussian({0.0, 0.0}, {{1.0, 2.0}, {2.0, 1.0}}), ConfigError);
  EXPECT_THROW(FeatureLaw::Gaussian({0.0, 0.0}, {{1.0, 0.5}, {0.0, 1.0}}), ConfigError);
  EXPECT_THROW(FeatureLaw::Uniform({1.0}, {0.0}), ConfigError);
  EXPECT_NO_THROW(FeatureLaw::Gaussian({0.0}, {{0.0}}));  // degenerate but valid
}

TEST(RealizeOutcome, NoiselessLinear) {
  GroundTruth t = Noiseless();
  t.true_fn = Polynomial::Univariate({0.0, 2.0});
  const double x = 3.0;
  EXPECT_DOUBLE_EQ(RealizeOutcome(t, std::span<const double>(&x, 1), 99), 6.0);
}

TEST(RealizeOutcome, UnitNoiseVariance) {
  GroundTruth t;
  t.noise_sd = 1.0;
  const double x = 0.3;
  std::vector<double> y(100000);
  for (std::size_t i = 0; i < y.size(); ++i) {
    RandomStream s({11, Purpose::kOutcome, i, 0, 0});
    y[i] = RealizeOutcome(t, std::span<const double>(&x, 1), s);
  }
  EXPECT_NEAR(SampleVariance(y), 1.0, 0.05);
}

// One KS test at p > 0.01 fails 1% of the time by construction, so the check
// runs 20 independent streams and allows two rejections (P(> 2) ~ 0.001).
TEST(RealizeOutcome, StandardNormalUnderKs) {
  GroundTruth t;
  t.true_fn = Polynomial::Univariate({0.0});
  t.noise_sd = 1.0;
  const double x = 0.0;
  const std::size_t n = 10000;
  int rejections = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<double> y(n);
    RandomStream s({seed, Purpose::kOutcome, 0, 0, 0});
    for (auto& v : y) v = RealizeOutcome(t, std::span<const double>(&x, 1), s);
    std::sort(y.begin(), y.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double F = NormalCdf(y[i]);
      d = std::max({d, F - double(i) / n, double(i + 1) / n - F});
    }
    rejections += d >= 1.628 / std::sqrt(double(n));  // p < 0.01
  }
  EXPECT_LE(rejections, 2);
}

TEST(RealizeOutcome, UniformNoiseHasUnitScale) {
  GroundTruth t;
  t.noise_law = NoiseLaw::kUniform;
  t.noise_sd = 1.0;
  const double x = 0.0;
  std::vector<double> y(100000);
  RandomStream s({13, Purpose::kOutcome, 0, 0, 0});
  for (auto& v : y) v = RealizeOutcome(t, std::span<const double>(&x, 1), s);
  EXPECT_NEAR(SampleVariance(y), 1.0, 0.02);
  EXPECT_LE(*std::max_element(y.begin(), y.end()), std::sqrt(3.0));
}

TEST(EvalTrueF, Examples) {
  const GroundTruth t = GroundTruth::Default();
  const double half = 0.5;
  EXPECT_DOUBLE_EQ(EvalTrueF(t, std::span<const double>(&half, 1)), 0.25);

  GroundTruth c;
  c.true_fn = Polynomial::Univariate({1.7});
  for (double x : {-3.0, 0.0, 12.5}) {
    EXPECT_DOUBLE_EQ(EvalTrueF(c, std::span<const double>(&x, 1)), 1.7);
  }

  GroundTruth lin;
  lin.true_fn = Polynomial::Univariate({-1.0 / 6.0, 1.0});
  const double x = 0.2113;
  const double v = EvalTrueF(lin, std::span<const double>(&x, 1));
  EXPECT_NEAR(v, 0.04464, 5e-5);
  EXPECT_NEAR(v, x * x, 1e-4);
  EXPECT_NEAR(EvalTrueF(lin, std::span<const double>(&kZeroBias, 1)), kZeroBias * kZeroBias,
              1e-15);
}

TEST(EvalTrueF, DimensionMismatchIsInputError) {
  const GroundTruth t = GroundTruth::Default();
  const double x[2] = {0.1, 0.2};
  EXPECT_THROW(EvalTrueF(t, x), InputError);
}

TEST(Polynomial, MultivariateTerms) {
  const Polynomial p(2, {{2.0, {1, 1}}, {1.0, {0, 2}}, {-1.0, {0, 0}}});
  const double x[2] = {3.0, 2.0};
  EXPECT_DOUBLE_EQ(p(x), 2.0 * 6.0 + 4.0 - 1.0);
}

TEST(DoseResponse, IdleIsExactlyNeutral) {
  for (DoseResponse d : {DoseResponse{}, DoseResponse{DoseResponse::Kind::kSaturating, 0.3, 2.0}}) {
    EXPECT_EQ(d.Shift(0.0, 1.7), 0.0);
    EXPECT_EQ(d.NoiseMultiplier(0.0), 1.0);
  }
}

TEST(DoseResponse, SaturatingInverse) {
  const DoseResponse d{DoseResponse::Kind::kSaturating, 0.5, 0.0};
  for (double target : {-0.3, -0.05, 0.0, 0.2}) {
    EXPECT_NEAR(d.Shift(d.LevelFor(target, 1.0), 1.0), target, 1e-12);
  }
}

TEST(GroundTruth, RejectsNegativeNoise) {
  GroundTruth t;
  t.noise_sd = -0.1;
  EXPECT_THROW(t.Validate(), ConfigError);
}

}  // namespace
}  // namespace pmlab
