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

// The four-step predict-then-modify pipeline, the generalization-gap
// experiment and the A/B detection experiment.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmlab/bmod.hpp"
#include "pmlab/errors.hpp"
#include "pmlab/parallel.hpp"
#include "pmlab/predictor.hpp"
#include "pmlab/rng.hpp"
#include "pmlab/stats.hpp"
#include "pmlab/worldgen.hpp"

namespace pmlab {

struct ShowcaseConfig {
  GroundTruth world = GroundTruth::Default();
  ModelSpec model = ModelSpec::Linear();
  InterventionPolicy policy = InterventionPolicy::Idle();
  std::size_t n_train = 10000;
  std::size_t n_showcase = 2000;
  int horizon_steps = 50;        // discretization of (t, t+k); used by the agent
  std::size_t n_fresh = 0;       // fresh non-modified users; 0 means n_showcase
  std::uint64_t seed = 1;
  double customer_effect = 0.0;  // additive effect for group B in the A/B test
  std::size_t ab_replicates = 2000;
  std::size_t bias_models = 20;  // pilot models behind the oracle policy
  int workers = 1;

  void Validate() const {
    world.Validate();
    model.Validate();
    policy.Validate();
    if (n_showcase < 2) throw ConfigError("n_showcase must be >= 2");
    if (horizon_steps < 1) throw ConfigError("horizon_steps must be >= 1");
    if (n_train < 1) throw ConfigError("n_train must be >= 1");
    if (!std::isfinite(customer_effect)) throw ConfigError("customer_effect must be finite");
  }

  InterventionPolicy EffectivePolicy() const {
    InterventionPolicy p = policy;
    if (p.kind == InterventionPolicy::Kind::kSequentialAgent) {
      p.agent.horizon_steps = horizon_steps;
      if (p.agent.explore_steps > horizon_steps) p.agent.explore_steps = horizon_steps;
    }
    return p;
  }
};

struct UserRecord {
  std::uint64_t id = 0;
  std::vector<double> x;
  double prediction = 0.0;       // y_hat fixed at time t
  double current_outcome = 0.0;  // y_t
  double intervention = 0.0;     // final level, or lambda for shrinkage
  double outcome = 0.0;          // y_tilde at t + k
  double error = 0.0;            // y_tilde - y_hat
  std::optional<Trajectory> trajectory;
};

struct ShowcaseResult {
  std::vector<UserRecord> users;
  double mse = 0.0;
  std::string policy;
  std::string model;
  std::uint64_t seed = 0;
  std::vector<std::string> streams;
};

namespace internal {

// Prediction and policy machinery shared by the showcase and A/B runs.
class Platform {
 public:
  explicit Platform(const ShowcaseConfig& cfg)
      : cfg_(cfg),
        policy_(cfg.EffectivePolicy()),
        world_(cfg.world),
        model_(Train(cfg.model, SamplePopulation(cfg.world, cfg.n_train, cfg.seed, 0))) {
    if (policy_.kind == InterventionPolicy::Kind::kOracleCounterBias) {
      oracle_.emplace(cfg.model, cfg.world, cfg.n_train, cfg.bias_models, cfg.seed, cfg.workers);
    }
  }

  const TrainedModel& model() const { return model_; }
  const InterventionPolicy& policy() const { return policy_; }
  const ModifiedWorld& world() const { return world_; }

  // Draws user `id` of replication `rep` from stream family `seed` and applies
  // the policy (or none). Fills everything in the record except the error.
  UserRecord Serve(std::uint64_t seed, std::uint64_t rep, std::uint64_t id, bool modify) const {
    const GroundTruth& truth = world_.truth();
    UserRecord rec;
    rec.id = id;
    rec.x.resize(truth.dims());
    RandomStream xs({seed, Purpose::kShowcaseFeatures, rep, id, 0});
    truth.feature_law.Sample(xs, rec.x);
    rec.prediction = model_.Predict(rec.x);
    RandomStream ys({seed, Purpose::kCurrentOutcome, rep, id, 0});
    rec.current_outcome = RealizeOutcome(truth, rec.x, ys);

    RandomStream us({seed, Purpose::kSensitivity, rep, id, 0});
    RandomStream zs({seed, Purpose::kOutcome, rep, id, 0});
    const double u = world_.DrawSensitivity(us);
    const double z = UnitNoise(truth.noise_law, zs);
    if (!modify) {
      rec.outcome = world_.Realize(Intervention::Level(0.0), rec.x, rec.prediction, u, z);
      return rec;
    }
    if (policy_.kind == InterventionPolicy::Kind::kSequentialAgent) {
      RandomStream steps({seed, Purpose::kStepNoise, rep, id, 0});
      Trajectory tr = RunSequentialAgent(policy_.agent, world_, rec.prediction, rec.x, u, steps, z, id);
      rec.intervention = tr.final_intervention;
      rec.outcome = tr.outcome;
      rec.trajectory = std::move(tr);
      return rec;
    }
    std::optional<double> bias;
    if (oracle_) bias = (*oracle_)(rec.x);
    RandomStream vs({seed, Purpose::kPolicyNoise, rep, id, 0});
    const Intervention b = ComputeIntervention(policy_, rec.prediction, rec.x,
                                               rec.current_outcome, world_.Context(bias), vs);
    rec.intervention = b.value;
    rec.outcome = world_.Realize(b, rec.x, rec.prediction, u, z);
    return rec;
  }

 private:
  ShowcaseConfig cfg_;
  InterventionPolicy policy_;
  ModifiedWorld world_;
  TrainedModel model_;
  std::optional<BiasOracle> oracle_;
};

inline double MeanSquaredError(const std::vector<UserRecord>& users) {
  double s = 0.0;
  for (const auto& u : users) s += u.error * u.error;
  return s / static_cast<double>(users.size());
}

}  // namespace internal

// Step 1 trains on a fresh unmodified sample, step 2 fixes y_hat for the
// showcase users, step 3 applies the policy, step 4 scores y_tilde - y_hat.
inline ShowcaseResult RunShowcase(const ShowcaseConfig& cfg) {
  cfg.Validate();
  const internal::Platform platform(cfg);
  ShowcaseResult res;
  res.users.resize(cfg.n_showcase);
  ParallelFor(cfg.n_showcase, cfg.workers, [&](std::size_t i) {
    UserRecord rec = platform.Serve(cfg.seed, 0, i, true);
    rec.error = rec.outcome - rec.prediction;
    res.users[i] = std::move(rec);
  });
  res.mse = internal::MeanSquaredError(res.users);
  res.policy = platform.policy().Name();
  res.model = cfg.model.Name();
  res.seed = cfg.seed;
  for (Purpose p : {Purpose::kTrainFeatures, Purpose::kTrainNoise, Purpose::kShowcaseFeatures,
                    Purpose::kCurrentOutcome, Purpose::kSensitivity, Purpose::kOutcome,
                    Purpose::kPolicyNoise, Purpose::kStepNoise}) {
    res.streams.push_back(StreamLabel(cfg.seed, p, 0));
  }
  return res;
}

struct GeneralizationReport {
  double showcase_mse = 0.0;  // modified showcase users
  double fresh_mse = 0.0;     // new users, no modification
  double ratio = 0.0;         // fresh / showcase
  bool control = false;       // the policy was Idle
  // Oracle predictions from the fitted model and the true world, averaged
  // over the feature law: sigma^2 + E[(f - f_hat)^2] for fresh users and
  // E[sigma_tilde^2 + (CATE + f - f_hat)^2] for showcase users.
  double predicted_fresh_mse = 0.0;
  std::optional<double> predicted_showcase_mse;  // idle, constant shift, shrinkage
  std::optional<double> predicted_ratio;
  ShowcaseResult showcase;
  std::vector<UserRecord> fresh;
};

namespace internal {

inline double SensitivityVariance(const SensitivityLaw& s) {
  switch (s.kind()) {
    case SensitivityLaw::Kind::kPoint: return 0.0;
    case SensitivityLaw::Kind::kUniform: return std::pow(s.second() - s.first(), 2) / 12.0;
    case SensitivityLaw::Kind::kGaussian: return s.second() * s.second();
  }
  return 0.0;
}

inline void PredictGeneralization(const ShowcaseConfig& cfg, const Platform& platform,
                                  GeneralizationReport& out) {
  constexpr std::size_t kPoints = 100000;
  const GroundTruth& truth = cfg.world;
  const InterventionPolicy& policy = platform.policy();
  const double s2 = truth.noise_sd * truth.noise_sd;
  using K = InterventionPolicy::Kind;
  const bool analytic = policy.kind == K::kIdle || policy.kind == K::kShrinkage ||
                        (policy.kind == K::kConstantShift && policy.policy_noise_sd == 0.0);
  const double mu = truth.sensitivity.Mean();
  const double var_u = SensitivityVariance(truth.sensitivity);
  RandomStream xs({DeriveSeed(cfg.seed, "oracle-quadrature"), Purpose::kShowcaseFeatures, 0, 0, 0});
  std::vector<double> x(truth.dims());
  double fresh = 0.0, show = 0.0;
  for (std::size_t i = 0; i < kPoints; ++i) {
    truth.feature_law.Sample(xs, x);
    const double b = truth.true_fn(x) - platform.model().Predict(x);  // Bias given the fit
    fresh += s2 + b * b;
    switch (policy.kind) {
      case K::kShrinkage: {
        const double k = 1.0 - policy.lambda;
        show += k * k * (s2 + b * b);
        break;
      }
      case K::kConstantShift: {
        const double g = truth.dose_response.Curve(policy.delta);
        const double m = truth.dose_response.NoiseMultiplier(policy.delta);
        show += m * m * s2 + var_u * g * g + (mu * g + b) * (mu * g + b);
        break;
      }
      default:
        show += s2 + b * b;
    }
  }
  out.predicted_fresh_mse = fresh / kPoints;
  if (analytic) {
    out.predicted_showcase_mse = show / kPoints;
    out.predicted_ratio = out.predicted_fresh_mse / *out.predicted_showcase_mse;
  }
}

}  // namespace internal

inline GeneralizationReport CompareGeneralization(const ShowcaseConfig& cfg) {
  GeneralizationReport out;
  out.showcase = RunShowcase(cfg);
  out.control = cfg.policy.kind == InterventionPolicy::Kind::kIdle;
  const internal::Platform platform(cfg);
  const std::size_t n = cfg.n_fresh ? cfg.n_fresh : cfg.n_showcase;
  const std::uint64_t fresh_seed = DeriveSeed(cfg.seed, "fresh-users");
  std::vector<UserRecord> fresh(n);
  ParallelFor(n, cfg.workers, [&](std::size_t i) {
    UserRecord rec = platform.Serve(fresh_seed, 0, i, false);
    rec.error = rec.outcome - rec.prediction;
    fresh[i] = std::move(rec);
  });
  out.showcase_mse = out.showcase.mse;
  out.fresh_mse = internal::MeanSquaredError(fresh);
  out.fresh = std::move(fresh);
  out.ratio = out.fresh_mse / out.showcase_mse;
  internal::PredictGeneralization(cfg, platform, out);
  return out;
}

struct AbReplicate {
  double difference = 0.0;  // mean(B) - mean(A)
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

struct AbTestReport {
  std::vector<int> groups;  // replicate 0 of the BMOD-on arm: 0 = A, 1 = B
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  std::vector<AbReplicate> bmod_on;
  std::vector<AbReplicate> bmod_off;
  double rejection_rate_on = 0.0;   // at alpha = 0.05
  double rejection_rate_off = 0.0;
  Estimate mean_difference_on;
  Estimate mean_difference_off;
  double variance_ratio = 0.0;      // var(diff | on) / var(diff | off)
  double ks_distance = 0.0;         // between the two t distributions
  double ks_critical = 0.0;         // alpha = 0.01
};

// Random halves A/B; group B gets customer_effect added to its outcomes.
// The BMOD-on arm applies the configured policy to every user; the BMOD-off
// arm uses independent streams and no modification.
inline AbTestReport RunAbTest(const ShowcaseConfig& cfg, double alpha = 0.05) {
  cfg.Validate();
  if (cfg.n_showcase < 4) throw InputError("ab-test: n_showcase must be >= 4");
  if (cfg.ab_replicates < 2) throw InputError("ab-test: ab_replicates must be >= 2");
  const internal::Platform platform(cfg);
  const std::size_t n = cfg.n_showcase;
  const std::size_t R = cfg.ab_replicates;

  AbTestReport out;
  out.bmod_on.resize(R);
  out.bmod_off.resize(R);
  std::vector<int> first_groups;

  auto run_arm = [&](bool modify, std::vector<AbReplicate>& dest, std::uint64_t seed) {
    ParallelFor(R, cfg.workers, [&](std::size_t r) {
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      RandomStream as({seed, Purpose::kAssignment, r, 0, 0});
      for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[as.Below(i + 1)]);
      std::vector<int> group(n);
      for (std::size_t i = 0; i < n; ++i) group[perm[i]] = i < n / 2 ? 0 : 1;
      std::vector<double> a, b;
      for (std::size_t i = 0; i < n; ++i) {
        const UserRecord rec = platform.Serve(seed, r, i, modify);
        if (group[i] == 0) {
          a.push_back(rec.outcome);
        } else {
          b.push_back(rec.outcome + cfg.customer_effect);
        }
      }
      const WelchResult w = WelchTTest(a, b);
      dest[r] = {w.difference, w.t, w.df, w.p_value};
      if (modify && r == 0) first_groups = std::move(group);
    });
  };
  run_arm(true, out.bmod_on, DeriveSeed(cfg.seed, "ab-bmod-on"));
  run_arm(false, out.bmod_off, DeriveSeed(cfg.seed, "ab-bmod-off"));

  out.groups = std::move(first_groups);
  out.size_a = n / 2;
  out.size_b = n - n / 2;
  std::vector<double> d_on(R), d_off(R), t_on(R), t_off(R);
  std::size_t rej_on = 0, rej_off = 0;
  for (std::size_t r = 0; r < R; ++r) {
    d_on[r] = out.bmod_on[r].difference;
    d_off[r] = out.bmod_off[r].difference;
    t_on[r] = out.bmod_on[r].t;
    t_off[r] = out.bmod_off[r].t;
    rej_on += out.bmod_on[r].p_value < alpha;
    rej_off += out.bmod_off[r].p_value < alpha;
  }
  out.rejection_rate_on = static_cast<double>(rej_on) / static_cast<double>(R);
  out.rejection_rate_off = static_cast<double>(rej_off) / static_cast<double>(R);
  out.mean_difference_on = MeanEstimate(d_on);
  out.mean_difference_off = MeanEstimate(d_off);
  out.variance_ratio = SampleVariance(d_on) / SampleVariance(d_off);
  out.ks_distance = KsDistance(t_on, t_off);
  out.ks_critical = KsCriticalValue(0.01, R, R);
  return out;
}

}  // namespace pmlab
