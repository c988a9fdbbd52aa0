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

// Predictive models with controllable bias and variance, and Monte Carlo
// estimation of Bias(f_hat(x)) and Var(f_hat(x)) over retraining.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pmlab/errors.hpp"
#include "pmlab/parallel.hpp"
#include "pmlab/rng.hpp"
#include "pmlab/stats.hpp"
#include "pmlab/worldgen.hpp"

namespace pmlab {

struct ModelSpec {
  enum class Family { kLinear, kPolynomial, kKNearestMean };

  Family family = Family::kLinear;
  int degree = 1;         // kPolynomial
  std::size_t k = 1;      // kKNearestMean
  double ridge = 0.0;

  static ModelSpec Linear(double ridge = 0.0) { return {Family::kLinear, 1, 1, ridge}; }
  static ModelSpec Polynomial(int degree, double ridge = 0.0) {
    return {Family::kPolynomial, degree, 1, ridge};
  }
  static ModelSpec KNearestMean(std::size_t k) { return {Family::kKNearestMean, 1, k, 0.0}; }

  int basis_degree() const { return family == Family::kLinear ? 1 : degree; }

  void Validate() const {
    if (family == Family::kPolynomial && degree < 1) throw ConfigError("model.degree must be >= 1");
    if (family == Family::kKNearestMean && k < 1) throw ConfigError("model.k must be >= 1");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ConfigError("model.ridge must be >= 0");
  }

  std::string Name() const {
    switch (family) {
      case Family::kLinear: return "linear";
      case Family::kPolynomial: return "polynomial(" + std::to_string(degree) + ")";
      case Family::kKNearestMean: return "k-nearest-mean(" + std::to_string(k) + ")";
    }
    return "?";
  }
};

// Exponent vectors of all monomials of total degree <= degree over `dims`
// features, graded: constant first, then degree 1 in feature order, ...
inline std::vector<std::vector<int>> MonomialExponents(std::size_t dims, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(dims, 0);
  for (int total = 0; total <= degree; ++total) {
    // Enumerate compositions of `total` into `dims` parts, lexicographically
    // descending in the first coordinate.
    auto rec = [&](auto&& self, std::size_t j, int left) -> void {
      if (j + 1 == dims) {
        cur[j] = left;
        out.push_back(cur);
        return;
      }
      for (int e = left; e >= 0; --e) {
        cur[j] = e;
        self(self, j + 1, left - e);
      }
    };
    rec(rec, 0, total);
  }
  return out;
}

class TrainedModel {
 public:
  const ModelSpec& spec() const { return spec_; }
  std::size_t dims() const { return dims_; }
  std::size_t train_size() const { return train_size_; }
  std::uint64_t train_seed() const { return train_seed_; }
  // Least-squares coefficients in MonomialExponents order (empty for k-NN).
  const Eigen::VectorXd& coefficients() const { return coef_; }

  double Predict(std::span<const double> x) const {
    if (x.size() != dims_) {
      throw InputError("predict: feature vector has dimension " + std::to_string(x.size()) +
                       ", model was trained on " + std::to_string(dims_));
    }
    if (spec_.family == ModelSpec::Family::kKNearestMean) return PredictNeighbours(x);
    if (dims_ == 1) {
      double acc = 0.0;
      for (Eigen::Index i = coef_.size() - 1; i >= 0; --i) acc = acc * x[0] + coef_[i];
      return acc;
    }
    double total = 0.0;
    for (std::size_t t = 0; t < exponents_.size(); ++t) {
      double v = coef_[static_cast<Eigen::Index>(t)];
      for (std::size_t j = 0; j < dims_; ++j) {
        for (int e = 0; e < exponents_[t][j]; ++e) v *= x[j];
      }
      total += v;
    }
    return total;
  }

 private:
  friend TrainedModel Train(const ModelSpec& spec, const PopulationSample& sample);

  double PredictNeighbours(std::span<const double> x) const {
    const std::size_t n = y_.size();
    std::vector<std::pair<double, std::uint64_t>> d(n);  // (distance^2, id)
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < dims_; ++j) {
        const double diff = X_[i * dims_ + j] - x[j];
        s += diff * diff;
      }
      d[i] = {s, ids_[i]};
      order[i] = i;
    }
    const std::size_t k = spec_.k;
    auto closer = [&](std::size_t a, std::size_t b) { return d[a] < d[b]; };
    if (k < n) std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += y_[order[i]];
    return s / static_cast<double>(k);
  }

  ModelSpec spec_;
  std::size_t dims_ = 1;
  std::size_t train_size_ = 0;
  std::uint64_t train_seed_ = 0;
  Eigen::VectorXd coef_;
  std::vector<std::vector<int>> exponents_;
  std::vector<double> X_;
  std::vector<double> y_;
  std::vector<std::uint64_t> ids_;
};

// Least squares through the normal equations (plus optional ridge), or
// memorization for k-nearest-mean. Deterministic in (spec, sample).
inline TrainedModel Train(const ModelSpec& spec, const PopulationSample& sample) {
  spec.Validate();
  TrainedModel m;
  m.spec_ = spec;
  m.dims_ = sample.dims();
  m.train_size_ = sample.n();
  m.train_seed_ = sample.seed;
  const std::size_t n = sample.n();
  const std::size_t p = m.dims_;

  if (spec.family == ModelSpec::Family::kKNearestMean) {
    if (n < spec.k) {
      throw InputError("train: k-nearest-mean needs n >= k (n = " + std::to_string(n) +
                       ", k = " + std::to_string(spec.k) + ")");
    }
    m.X_.assign(sample.X.data(), sample.X.data() + n * p);
    m.y_.assign(sample.y.data(), sample.y.data() + n);
    m.ids_ = sample.ids;
    return m;
  }

  const int degree = spec.basis_degree();
  m.exponents_ = MonomialExponents(p, degree);
  const auto q = static_cast<Eigen::Index>(m.exponents_.size());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q);

  if (p == 1) {
    // Scalar feature: accumulate power sums, the Gram matrix is Hankel.
    std::vector<double> sx(2 * static_cast<std::size_t>(degree) + 1, 0.0);
    std::vector<double> sxy(static_cast<std::size_t>(degree) + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = sample.X(static_cast<Eigen::Index>(i), 0);
      const double y = sample.y[static_cast<Eigen::Index>(i)];
      double pw = 1.0;
      for (std::size_t e = 0; e < sx.size(); ++e) {
        sx[e] += pw;
        if (e < sxy.size()) sxy[e] += pw * y;
        pw *= x;
      }
    }
    for (Eigen::Index a = 0; a < q; ++a) {
      rhs[a] = sxy[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < q; ++b) gram(a, b) = sx[static_cast<std::size_t>(a + b)];
    }
  } else {
    Eigen::VectorXd phi(q);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = sample.row(i);
      for (Eigen::Index t = 0; t < q; ++t) {
        double v = 1.0;
        for (std::size_t j = 0; j < p; ++j) {
          for (int e = 0; e < m.exponents_[static_cast<std::size_t>(t)][j]; ++e) v *= row[j];
        }
        phi[t] = v;
      }
      gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
      rhs += phi * sample.y[static_cast<Eigen::Index>(i)];
    }
    gram = gram.selfadjointView<Eigen::Lower>();
  }

  if (spec.ridge > 0.0) gram.diagonal().array() += spec.ridge;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
  if (spec.ridge == 0.0 && qr.rank() < q) {
    throw TrainingError("train: design matrix is rank deficient (rank " +
                        std::to_string(qr.rank()) + " < " + std::to_string(q) +
                        " parameters, n = " + std::to_string(n) +
                        "); set a positive ridge weight");
  }
  m.coef_ = qr.solve(rhs);
  if (!m.coef_.allFinite()) throw TrainingError("train: non-finite coefficients");
  return m;
}

inline double Predict(const TrainedModel& model, std::span<const double> x) {
  return model.Predict(x);
}

// One independently trained replication: fresh sample of size n_train.
inline TrainedModel TrainReplication(const ModelSpec& spec, const GroundTruth& truth,
                                     std::size_t n_train, std::uint64_t seed,
                                     std::uint64_t replication) {
  return Train(spec, SamplePopulation(truth, n_train, seed, replication));
}

// Bias follows f(x) - E[f_hat(x)], the sign under which the modified
// error reads sigma_tilde^2 + (CATE + Bias)^2 + Var.
struct BiasVariance {
  Estimate mean_prediction;
  Estimate bias;
  Estimate variance;
  std::vector<double> predictions;  // one per replication, in order
};

inline BiasVariance SummarizePredictions(std::vector<double> preds, double truth_at_x) {
  BiasVariance out;
  out.mean_prediction = MeanEstimate(preds);
  out.bias = {truth_at_x - out.mean_prediction.value, out.mean_prediction.se};
  const double n = static_cast<double>(preds.size());
  std::vector<double> sq(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - out.mean_prediction.value;
    sq[i] = d * d * n / (n - 1.0);
  }
  out.variance = MeanEstimate(sq);
  out.predictions = std::move(preds);
  return out;
}

inline BiasVariance EstimateBiasVariance(const ModelSpec& spec, const GroundTruth& truth,
                                         std::size_t n_train, std::span<const double> x,
                                         std::size_t reps, std::uint64_t seed,
                                         int workers = 1) {
  if (reps < 2) throw InputError("estimate_bias_variance: reps must be >= 2");
  const double fx = EvalTrueF(truth, x);
  std::vector<double> preds(reps);
  ParallelFor(reps, workers, [&](std::size_t r) {
    preds[r] = TrainReplication(spec, truth, n_train, seed, r).Predict(x);
  });
  return SummarizePredictions(std::move(preds), fx);
}

// A fixed set of independently trained models; Bias(x) = f(x) - mean f_hat(x).
// Used where a policy needs a bias estimate at many x without retraining.
class BiasOracle {
 public:
  BiasOracle(const ModelSpec& spec, const GroundTruth& truth, std::size_t n_train,
             std::size_t models, std::uint64_t seed, int workers = 1)
      : truth_(truth) {
    if (models < 1) throw InputError("bias oracle needs at least one model");
    models_.resize(models);
    const std::uint64_t pilot_seed = DeriveSeed(seed, "bias-oracle");
    ParallelFor(models, workers, [&](std::size_t r) {
      models_[r] = TrainReplication(spec, truth, n_train, pilot_seed, r);
    });
  }

  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& m : models_) s += m.Predict(x);
    return truth_.true_fn(x) - s / static_cast<double>(models_.size());
  }

 private:
  GroundTruth truth_;
  std::vector<TrainedModel> models_;
};

}  // namespace pmlab
