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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace pmlab {

// A Monte Carlo point estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

inline double Mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Unbiased (n - 1) sample variance; 0 for fewer than two values.
inline double SampleVariance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline constexpr std::size_t kMaxBatches = 1000;

// Standard error of the mean by batch means. With at most kMaxBatches values
// every batch holds one value and this is the ordinary sd / sqrt(n).
inline double BatchMeansSE(std::span<const double> v,
                           std::size_t max_batches = kMaxBatches) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const std::size_t batches = std::min(n, max_batches);
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * n / batches;
    const std::size_t hi = (b + 1) * n / batches;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    means[b] = s / static_cast<double>(hi - lo);
  }
  return std::sqrt(SampleVariance(means) / static_cast<double>(batches));
}

inline Estimate MeanEstimate(std::span<const double> v) {
  return {Mean(v), BatchMeansSE(v)};
}

inline double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct WelchResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double difference = 0.0;  // mean_b - mean_a
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided
};

// Two-sample Welch t test of mean(b) - mean(a). Both samples need >= 2 values.
inline WelchResult WelchTTest(std::span<const double> a, std::span<const double> b) {
  WelchResult r;
  r.mean_a = Mean(a);
  r.mean_b = Mean(b);
  r.difference = r.mean_b - r.mean_a;
  const double va = SampleVariance(a) / static_cast<double>(a.size());
  const double vb = SampleVariance(b) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (!(se2 > 0.0)) {
    r.t = r.difference == 0.0 ? 0.0 : std::copysign(
        std::numeric_limits<double>::infinity(), r.difference);
    r.df = static_cast<double>(a.size() + b.size() - 2);
    r.p_value = r.difference == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = r.difference / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.size() - 1) +
          vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  return r;
}

// Kolmogorov-Smirnov distance between two empirical distributions.
inline double KsDistance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Large-sample two-sample KS critical value c(alpha) * sqrt((n + m) / (n m)).
inline double KsCriticalValue(double alpha, std::size_t n, std::size_t m) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace pmlab
