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

// The synthetic world: feature law, true outcome function, additive noise
// and the ground-truth response of outcomes to an intervention level.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pmlab/errors.hpp"
#include "pmlab/rng.hpp"

namespace pmlab {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Monomial {
  double coefficient = 0.0;
  std::vector<int> powers;  // one exponent per feature
};

// A polynomial over a p-dimensional feature vector.
class Polynomial {
 public:
  Polynomial() : Polynomial(Univariate({0.0})) {}

  Polynomial(std::size_t dims, std::vector<Monomial> terms)
      : dims_(dims), terms_(std::move(terms)) {
    if (dims_ == 0) throw ConfigError("true_fn: feature dimension must be >= 1");
    for (const auto& t : terms_) {
      if (t.powers.size() != dims_) {
        throw ConfigError("true_fn: term has " + std::to_string(t.powers.size()) +
                          " exponents, expected " + std::to_string(dims_));
      }
      for (int p : t.powers) {
        if (p < 0) throw ConfigError("true_fn: negative exponent");
      }
      if (!std::isfinite(t.coefficient)) throw ConfigError("true_fn: non-finite coefficient");
    }
  }

  // a0 + a1 x + a2 x^2 + ... over a scalar feature.
  static Polynomial Univariate(std::vector<double> coefficients) {
    if (coefficients.empty()) coefficients.push_back(0.0);
    std::vector<Monomial> terms;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
      terms.push_back({coefficients[i], {static_cast<int>(i)}});
    }
    Polynomial p(1, std::move(terms));
    p.horner_ = std::move(coefficients);
    return p;
  }

  std::size_t dims() const { return dims_; }
  const std::vector<Monomial>& terms() const { return terms_; }

  // Set when built by Univariate(); lets serialization keep the short form.
  const std::optional<std::vector<double>>& univariate_coefficients() const {
    return horner_;
  }

  double operator()(std::span<const double> x) const {
    if (x.size() != dims_) {
      throw InputError("feature vector has dimension " + std::to_string(x.size()) +
                       ", true_fn expects " + std::to_string(dims_));
    }
    if (horner_) {
      double acc = 0.0;
      for (auto it = horner_->rbegin(); it != horner_->rend(); ++it) acc = acc * x[0] + *it;
      return acc;
    }
    double total = 0.0;
    for (const auto& t : terms_) {
      double v = t.coefficient;
      for (std::size_t j = 0; j < dims_; ++j) {
        for (int e = 0; e < t.powers[j]; ++e) v *= x[j];
      }
      total += v;
    }
    return total;
  }

 private:
  std::size_t dims_ = 1;
  std::vector<Monomial> terms_;
  std::optional<std::vector<double>> horner_;
};

// Uniform over an axis-aligned box, or Gaussian with mean and covariance.
class FeatureLaw {
 public:
  enum class Kind { kUniform, kGaussian };

  FeatureLaw() : a_{0.0}, b_{1.0} {}

  static FeatureLaw Uniform(std::vector<double> lower, std::vector<double> upper) {
    if (lower.empty() || lower.size() != upper.size()) {
      throw ConfigError("feature_law: lower/upper must be non-empty and of equal length");
    }
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (!(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] <= upper[i])) {
        throw ConfigError("feature_law: need finite lower <= upper in every dimension");
      }
    }
    FeatureLaw law;
    law.kind_ = Kind::kUniform;
    law.a_ = std::move(lower);
    law.b_ = std::move(upper);
    return law;
  }

  static FeatureLaw Gaussian(std::vector<double> mean,
                             std::vector<std::vector<double>> covariance) {
    const std::size_t p = mean.size();
    if (p == 0 || covariance.size() != p) {
      throw ConfigError("feature_law: covariance must be p x p with p = len(mean) >= 1");
    }
    Eigen::MatrixXd cov(p, p);
    for (std::size_t i = 0; i < p; ++i) {
      if (covariance[i].size() != p) throw ConfigError("feature_law: covariance is not square");
      for (std::size_t j = 0; j < p; ++j) cov(i, j) = covariance[i][j];
    }
    for (std::size_t i = 0; i < p; ++i) {
      if (cov(i, i) < 0.0) throw ConfigError("feature_law: negative variance on the diagonal");
    }
    if (!cov.isApprox(cov.transpose())) throw ConfigError("feature_law: covariance is not symmetric");
    // Semi-definite covariances (e.g. zero variance) go through LDLT.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw ConfigError("feature_law: covariance is not positive semi-definite");
    }
    Eigen::MatrixXd l = ldlt.matrixL();
    Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd factor = ldlt.transpositionsP().transpose() * (l * d.asDiagonal());

    FeatureLaw law;
    law.kind_ = Kind::kGaussian;
    law.a_ = std::move(mean);
    law.covariance_ = std::move(covariance);
    law.factor_.assign(factor.data(), factor.data() + p * p);  // column-major
    return law;
  }

  Kind kind() const { return kind_; }
  std::size_t dims() const { return a_.size(); }
  const std::vector<double>& lower() const { return a_; }
  const std::vector<double>& upper() const { return b_; }
  const std::vector<double>& mean() const { return a_; }
  const std::vector<std::vector<double>>& covariance() const { return covariance_; }

  void Sample(RandomStream& rng, std::span<double> out) const {
    const std::size_t p = dims();
    if (kind_ == Kind::kUniform) {
      for (std::size_t j = 0; j < p; ++j) out[j] = rng.Uniform(a_[j], b_[j]);
      return;
    }
    double z[16];
    std::vector<double> zbig;
    double* zp = z;
    if (p > 16) {
      zbig.resize(p);
      zp = zbig.data();
    }
    for (std::size_t j = 0; j < p; ++j) zp[j] = rng.Normal();
    for (std::size_t i = 0; i < p; ++i) {
      double v = a_[i];
      for (std::size_t j = 0; j < p; ++j) v += factor_[j * p + i] * zp[j];
      out[i] = v;
    }
  }

 private:
  Kind kind_ = Kind::kUniform;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<std::vector<double>> covariance_;
  std::vector<double> factor_;
};

enum class NoiseLaw { kGaussian, kUniform };

// Mean 0, variance 1 draw from the configured noise law.
inline double UnitNoise(NoiseLaw law, RandomStream& rng) {
  if (law == NoiseLaw::kUniform) return std::numbers::sqrt3 * (2.0 * rng.Uniform() - 1.0);
  return rng.Normal();
}

// Intervention level b and user sensitivity u -> mean outcome shift u * g(b),
// plus the noise-scale multiplier m(b) so that sigma_tilde = m(b) * sigma.
struct DoseResponse {
  enum class Kind { kLinear, kSaturating };

  Kind kind = Kind::kLinear;
  double saturation = 1.0;   // g(b) = s * tanh(b / s) for kSaturating
  double noise_slope = 0.0;  // m(b) = max(0, 1 + noise_slope * |b|)

  double Curve(double b) const {
    return kind == Kind::kLinear ? b : saturation * std::tanh(b / saturation);
  }

  double Shift(double b, double u) const { return u * Curve(b); }

  double NoiseMultiplier(double b) const {
    return std::max(0.0, 1.0 + noise_slope * std::fabs(b));
  }

  // Level whose shift at sensitivity u equals target (clamped to the
  // saturating range). u == 0 has no effect at any level and returns 0.
  double LevelFor(double target, double u) const {
    if (u == 0.0) return 0.0;
    const double g = target / u;
    if (kind == Kind::kLinear) return g;
    const double r = std::clamp(g / saturation, -1.0 + 1e-12, 1.0 - 1e-12);
    return saturation * std::atanh(r);
  }

  // E[g(b + v)] for v ~ N(0, sd^2), by a 64-node quantile rule.
  double ExpectedCurve(double b, double sd) const {
    if (sd == 0.0 || kind == Kind::kLinear) return Curve(b);
    constexpr int kNodes = 64;
    double acc = 0.0;
    for (int i = 0; i < kNodes; ++i) {
      const double q = (i + 0.5) / kNodes;
      acc += Curve(b + sd * InverseNormalCdf(q));
    }
    return acc / kNodes;
  }

  void Validate() const {
    if (!(saturation > 0.0) || !std::isfinite(saturation)) {
      throw ConfigError("dose_response.saturation must be > 0");
    }
    if (!std::isfinite(noise_slope)) throw ConfigError("dose_response.noise_slope must be finite");
  }

 private:
  // Acklam's rational approximation, ~1e-9 relative error.
  static double InverseNormalCdf(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double lo = 0.02425;
    if (p < lo) {
      const double q = std::sqrt(-2.0 * std::log(p));
      return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - lo) return -InverseNormalCdf(1.0 - p);
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
};

// Distribution of per-user sensitivity u.
class SensitivityLaw {
 public:
  enum class Kind { kPoint, kUniform, kGaussian };

  static SensitivityLaw Point(double value) { return {Kind::kPoint, value, 0.0}; }
  static SensitivityLaw Uniform(double lower, double upper) {
    if (!(lower <= upper)) throw ConfigError("sensitivity: need lower <= upper");
    return {Kind::kUniform, lower, upper};
  }
  static SensitivityLaw Gaussian(double mean, double sd) {
    if (!(sd >= 0.0)) throw ConfigError("sensitivity: sd must be >= 0");
    return {Kind::kGaussian, mean, sd};
  }

  SensitivityLaw() = default;

  Kind kind() const { return kind_; }
  double first() const { return p1_; }
  double second() const { return p2_; }

  double Mean() const { return kind_ == Kind::kUniform ? 0.5 * (p1_ + p2_) : p1_; }

  double Draw(RandomStream& rng) const {
    switch (kind_) {
      case Kind::kPoint: return p1_;
      case Kind::kUniform: return rng.Uniform(p1_, p2_);
      case Kind::kGaussian: return p1_ + p2_ * rng.Normal();
    }
    return p1_;
  }

 private:
  SensitivityLaw(Kind k, double a, double b) : kind_(k), p1_(a), p2_(b) {}

  Kind kind_ = Kind::kPoint;
  double p1_ = 1.0;
  double p2_ = 0.0;
};

struct GroundTruth {
  Polynomial true_fn = Polynomial::Univariate({0.0, 0.0, 1.0});
  double noise_sd = 0.05;
  NoiseLaw noise_law = NoiseLaw::kGaussian;
  FeatureLaw feature_law = FeatureLaw::Uniform({0.0}, {1.0});
  DoseResponse dose_response;
  SensitivityLaw sensitivity = SensitivityLaw::Point(1.0);

  // x ~ U[0,1], f(x) = x^2, sigma = 0.05, linear dose, u = 1.
  static GroundTruth Default() { return {}; }

  std::size_t dims() const { return feature_law.dims(); }

  void Validate() const {
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be >= 0");
    if (true_fn.dims() != feature_law.dims()) {
      throw ConfigError("true_fn dimension " + std::to_string(true_fn.dims()) +
                        " does not match feature_law dimension " +
                        std::to_string(feature_law.dims()));
    }
    dose_response.Validate();
  }
};

struct PopulationSample {
  std::vector<std::uint64_t> ids;
  FeatureMatrix X;
  Eigen::VectorXd y;
  std::vector<std::string> seed_manifest;
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;

  std::size_t n() const { return ids.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(X.cols()); }
  std::span<const double> row(std::size_t i) const {
    return {X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())};
  }
};

inline std::string StreamLabel(std::uint64_t seed, Purpose purpose, std::uint64_t replication) {
  return "seed=" + std::to_string(seed) + ";purpose=" + PurposeName(purpose) +
         ";replication=" + std::to_string(replication);
}

// Draws n users with x ~ feature_law and y = f(x) + eps. Pure in
// (truth, n, seed, replication, purposes).
inline PopulationSample SamplePopulation(const GroundTruth& truth, std::size_t n,
                                         std::uint64_t seed, std::uint64_t replication = 0,
                                         Purpose features = Purpose::kTrainFeatures,
                                         Purpose noise = Purpose::kTrainNoise) {
  if (n < 1) throw InputError("sample_population: n must be >= 1");
  truth.Validate();
  const std::size_t p = truth.dims();
  PopulationSample s;
  s.seed = seed;
  s.replication = replication;
  s.ids.resize(n);
  s.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  s.y.resize(static_cast<Eigen::Index>(n));
  RandomStream xs({seed, features, replication, 0, 0});
  RandomStream es({seed, noise, replication, 0, 0});
  for (std::size_t i = 0; i < n; ++i) {
    s.ids[i] = i;
    std::span<double> row(s.X.data() + i * p, p);
    truth.feature_law.Sample(xs, row);
    s.y[static_cast<Eigen::Index>(i)] =
        truth.true_fn(row) + truth.noise_sd * UnitNoise(truth.noise_law, es);
  }
  s.seed_manifest = {StreamLabel(seed, features, replication),
                     StreamLabel(seed, noise, replication)};
  return s;
}

// f(x), no noise.
inline double EvalTrueF(const GroundTruth& truth, std::span<const double> x) {
  return truth.true_fn(x);
}

inline double RealizeOutcome(const GroundTruth& truth, std::span<const double> x,
                             RandomStream& rng) {
  return truth.true_fn(x) + truth.noise_sd * UnitNoise(truth.noise_law, rng);
}

// x must lie in the support of feature_law; this is not checked.
inline double RealizeOutcome(const GroundTruth& truth, std::span<const double> x,
                             std::uint64_t seed) {
  RandomStream rng({seed, Purpose::kOutcome, 0, 0, 0});
  return RealizeOutcome(truth, x, rng);
}

}  // namespace pmlab
