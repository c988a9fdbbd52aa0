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

// Intervention policies h(y_hat, x, y_t) -> B and the ground-truth modified
// outcome y_tilde = g(do(B), x) + eps_tilde, including a sequential agent
// that nudges a user toward a fixed prediction over the (t, t+k) window.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmlab/errors.hpp"
#include "pmlab/rng.hpp"
#include "pmlab/stats.hpp"
#include "pmlab/worldgen.hpp"

namespace pmlab {

struct AgentConfig {
  std::vector<double> action_grid;  // ascending, contains 0
  int horizon_steps = 50;
  int explore_steps = 2;
  double step_noise_sd = 0.01;

  // Grid {-0.2, -0.15, ..., 0.2}, T = 50, E = 2, step noise 0.01.
  static AgentConfig Default() {
    AgentConfig cfg;
    for (int i = -4; i <= 4; ++i) cfg.action_grid.push_back(0.05 * i);
    return cfg;
  }

  void Validate() const {
    if (action_grid.size() < 2) throw ConfigError("agent.action_grid needs at least 2 levels");
    if (std::all_of(action_grid.begin(), action_grid.end(),
                    [&](double b) { return b == action_grid.front(); })) {
      throw ConfigError("agent.action_grid is degenerate: all actions identical");
    }
    if (!std::is_sorted(action_grid.begin(), action_grid.end()) ||
        std::adjacent_find(action_grid.begin(), action_grid.end()) != action_grid.end()) {
      throw ConfigError("agent.action_grid must be strictly ascending");
    }
    if (std::find(action_grid.begin(), action_grid.end(), 0.0) == action_grid.end()) {
      throw ConfigError("agent.action_grid must contain 0");
    }
    if (horizon_steps < 1) throw ConfigError("agent.horizon_steps must be >= 1");
    if (explore_steps < 2) throw ConfigError("agent.explore_steps must be >= 2");
    if (explore_steps > horizon_steps) {
      throw ConfigError("agent.explore_steps must be <= agent.horizon_steps");
    }
    if (!(step_noise_sd >= 0.0)) throw ConfigError("agent.step_noise_sd must be >= 0");
  }
};

struct InterventionPolicy {
  enum class Kind { kIdle, kConstantShift, kOracleCounterBias, kShrinkage, kSequentialAgent };

  Kind kind = Kind::kIdle;
  double delta = 0.0;            // kConstantShift
  double lambda = 0.0;           // kShrinkage
  bool continuous = true;        // kOracleCounterBias: exact level, else nearest on `grid`
  std::vector<double> grid;      // kOracleCounterBias, grid mode
  AgentConfig agent;             // kSequentialAgent
  double policy_noise_sd = 0.0;  // additive level noise upsilon

  static InterventionPolicy Idle() { return {}; }
  static InterventionPolicy ConstantShift(double delta, double noise_sd = 0.0) {
    InterventionPolicy p;
    p.kind = Kind::kConstantShift;
    p.delta = delta;
    p.policy_noise_sd = noise_sd;
    return p;
  }
  static InterventionPolicy OracleCounterBias() {
    InterventionPolicy p;
    p.kind = Kind::kOracleCounterBias;
    return p;
  }
  static InterventionPolicy OracleCounterBiasOnGrid(std::vector<double> grid) {
    InterventionPolicy p = OracleCounterBias();
    p.continuous = false;
    p.grid = std::move(grid);
    return p;
  }
  static InterventionPolicy Shrinkage(double lambda) {
    InterventionPolicy p;
    p.kind = Kind::kShrinkage;
    p.lambda = lambda;
    return p;
  }
  static InterventionPolicy SequentialAgent(AgentConfig cfg = AgentConfig::Default()) {
    InterventionPolicy p;
    p.kind = Kind::kSequentialAgent;
    p.agent = std::move(cfg);
    return p;
  }

  void Validate() const {
    if (!(policy_noise_sd >= 0.0)) throw ConfigError("policy.noise_sd must be >= 0");
    switch (kind) {
      case Kind::kIdle: break;
      case Kind::kConstantShift:
        if (!std::isfinite(delta)) throw ConfigError("policy.delta must be finite");
        break;
      case Kind::kOracleCounterBias:
        if (!continuous && grid.empty()) throw ConfigError("policy.grid must be non-empty in grid mode");
        break;
      case Kind::kShrinkage:
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("policy.lambda must lie in [0, 1]");
        if (policy_noise_sd > 0.0) throw ConfigError("policy.noise_sd is not supported for shrinkage");
        break;
      case Kind::kSequentialAgent: agent.Validate(); break;
    }
  }

  std::string Name() const {
    auto num = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    switch (kind) {
      case Kind::kIdle: return "idle";
      case Kind::kConstantShift: return "constant_shift(" + num(delta) + ")";
      case Kind::kOracleCounterBias: return continuous ? "oracle_counter_bias" : "oracle_counter_bias_grid";
      case Kind::kShrinkage: return "shrinkage(" + num(lambda) + ")";
      case Kind::kSequentialAgent: return "sequential_agent";
    }
    return "?";
  }
};

// Output of a policy: an intervention level, or the shrinkage marker.
struct Intervention {
  enum class Kind { kLevel, kShrinkage };

  Kind kind = Kind::kLevel;
  double value = 0.0;     // realized level, or lambda
  double intended = 0.0;  // level before policy noise

  static Intervention Level(double b) { return {Kind::kLevel, b, b}; }
  static Intervention Shrink(double lambda) { return {Kind::kShrinkage, lambda, lambda}; }
};

// Side information a policy may consult.
struct PolicyContext {
  std::optional<double> bias;  // estimate of Bias(f_hat(x)) = f(x) - E f_hat(x)
  DoseResponse dose;
  double mean_sensitivity = 1.0;
};

inline Intervention ComputeIntervention(const InterventionPolicy& policy, double yhat,
                                        std::span<const double> x, double y_t,
                                        const PolicyContext& ctx, RandomStream& noise) {
  (void)yhat;
  (void)x;
  (void)y_t;
  auto with_noise = [&](double level) {
    Intervention out = Intervention::Level(level);
    if (policy.policy_noise_sd > 0.0) out.value += policy.policy_noise_sd * noise.Normal();
    return out;
  };
  switch (policy.kind) {
    case InterventionPolicy::Kind::kIdle: return Intervention::Level(0.0);
    case InterventionPolicy::Kind::kConstantShift: return with_noise(policy.delta);
    case InterventionPolicy::Kind::kOracleCounterBias: {
      if (!ctx.bias) throw ConfigError("oracle_counter_bias requires a bias estimate in context");
      const double target = -*ctx.bias;
      if (policy.continuous) return with_noise(ctx.dose.LevelFor(target, ctx.mean_sensitivity));
      double best = policy.grid.front();
      double best_err = std::numeric_limits<double>::infinity();
      for (double b : policy.grid) {
        const double err = std::fabs(ctx.mean_sensitivity * ctx.dose.Curve(b) - target);
        if (err < best_err || (err == best_err && std::fabs(b) < std::fabs(best))) {
          best = b;
          best_err = err;
        }
      }
      return with_noise(best);
    }
    case InterventionPolicy::Kind::kShrinkage: return Intervention::Shrink(policy.lambda);
    case InterventionPolicy::Kind::kSequentialAgent:
      throw ConfigError("sequential_agent interventions come from RunSequentialAgent");
  }
  return Intervention::Level(0.0);
}

inline Intervention ComputeIntervention(const InterventionPolicy& policy, double yhat,
                                        std::span<const double> x, double y_t,
                                        const PolicyContext& ctx, std::uint64_t seed) {
  RandomStream noise({seed, Purpose::kPolicyNoise, 0, 0, 0});
  return ComputeIntervention(policy, yhat, x, y_t, ctx, noise);
}

// The world seen through do(B). Level b: y_tilde = f(x) + u g(b) + m(b) sigma z.
// Shrinkage lambda: y_tilde = (1 - lambda) f(x) + lambda y_hat + (1 - lambda) sigma z.
class ModifiedWorld {
 public:
  explicit ModifiedWorld(GroundTruth truth) : truth_(std::move(truth)) { truth_.Validate(); }

  const GroundTruth& truth() const { return truth_; }

  double DrawSensitivity(RandomStream& rng) const { return truth_.sensitivity.Draw(rng); }

  PolicyContext Context(std::optional<double> bias = std::nullopt) const {
    return {bias, truth_.dose_response, truth_.sensitivity.Mean()};
  }

  // E[y_tilde | x, intervention, u].
  double ConditionalMean(const Intervention& b, std::span<const double> x, double yhat,
                         double u) const {
    const double fx = truth_.true_fn(x);
    if (b.kind == Intervention::Kind::kShrinkage) return (1.0 - b.value) * fx + b.value * yhat;
    return fx + truth_.dose_response.Shift(b.value, u);
  }

  double NoiseScale(const Intervention& b) const {
    if (b.kind == Intervention::Kind::kShrinkage) return (1.0 - b.value) * truth_.noise_sd;
    return truth_.dose_response.NoiseMultiplier(b.value) * truth_.noise_sd;
  }

  // unit_noise is the same standardized draw z the unmodified outcome would use.
  double Realize(const Intervention& b, std::span<const double> x, double yhat, double u,
                 double unit_noise) const {
    return ConditionalMean(b, x, yhat, u) + NoiseScale(b) * unit_noise;
  }

 private:
  GroundTruth truth_;
};

// E[y_tilde | x, y_hat] for a policy whose intended intervention is `b`,
// averaging user sensitivity, policy noise and outcome noise.
inline double ExpectedModifiedMean(const ModifiedWorld& world, const InterventionPolicy& policy,
                                   const Intervention& b, std::span<const double> x,
                                   double yhat) {
  const auto& truth = world.truth();
  const double fx = truth.true_fn(x);
  if (b.kind == Intervention::Kind::kShrinkage) return (1.0 - b.value) * fx + b.value * yhat;
  return fx + truth.sensitivity.Mean() *
                  truth.dose_response.ExpectedCurve(b.intended, policy.policy_noise_sd);
}

inline double RealizeModifiedOutcome(const ModifiedWorld& world, const Intervention& b,
                                     std::span<const double> x, double yhat,
                                     std::uint64_t seed, std::uint64_t user = 0) {
  RandomStream us({seed, Purpose::kSensitivity, 0, user, 0});
  RandomStream zs({seed, Purpose::kOutcome, 0, user, 0});
  const double u = world.DrawSensitivity(us);
  return world.Realize(b, x, yhat, u, UnitNoise(world.truth().noise_law, zs));
}

struct AgentStep {
  int step = 0;
  double action = 0.0;
  double observation = 0.0;
  double reward = 0.0;  // -(y_hat - observation)^2
};

struct Trajectory {
  std::uint64_t user_id = 0;
  std::vector<AgentStep> steps;
  double final_intervention = 0.0;
  double outcome = 0.0;
  double sensitivity = 1.0;
};

// Certainty-equivalence controller. Steps 1..E alternate the lowest and
// highest grid action; afterwards it fits y' = c + u b by least squares on all
// observed (b, y') pairs and plays the grid action minimizing
// (y_hat - (c + u b))^2, ties to the smaller |b| then the smaller b. The final
// outcome is realized at the last action with the supplied unit noise.
inline Trajectory RunSequentialAgent(const AgentConfig& cfg, const ModifiedWorld& world,
                                     double yhat, std::span<const double> x, double u,
                                     RandomStream& step_noise, double final_unit_noise,
                                     std::uint64_t user_id = 0) {
  cfg.Validate();
  const auto& truth = world.truth();
  const double fx = truth.true_fn(x);
  const double lo = cfg.action_grid.front();
  const double hi = cfg.action_grid.back();

  Trajectory tr;
  tr.user_id = user_id;
  tr.sensitivity = u;
  tr.steps.reserve(static_cast<std::size_t>(cfg.horizon_steps));
  double n = 0, sb = 0, sbb = 0, sy = 0, sby = 0;
  double action = 0.0;
  for (int t = 1; t <= cfg.horizon_steps; ++t) {
    if (t <= cfg.explore_steps) {
      action = (t % 2 == 1) ? lo : hi;
    } else {
      const double denom = n * sbb - sb * sb;
      const double slope = denom > 0.0 ? (n * sby - sb * sy) / denom : 0.0;
      const double intercept = (sy - slope * sb) / n;
      double best_err = std::numeric_limits<double>::infinity();
      for (double b : cfg.action_grid) {
        const double gap = yhat - (intercept + slope * b);
        const double err = gap * gap;
        const bool better = err < best_err ||
                            (err == best_err && (std::fabs(b) < std::fabs(action) ||
                                                 (std::fabs(b) == std::fabs(action) && b < action)));
        if (better) {
          best_err = err;
          action = b;
        }
      }
    }
    const double obs = fx + truth.dose_response.Shift(action, u) +
                       cfg.step_noise_sd * step_noise.Normal();
    n += 1;
    sb += action;
    sbb += action * action;
    sy += obs;
    sby += action * obs;
    tr.steps.push_back({t, action, obs, -(yhat - obs) * (yhat - obs)});
  }
  tr.final_intervention = action;
  tr.outcome = world.Realize(Intervention::Level(action), x, yhat, u, final_unit_noise);
  return tr;
}

// Seeded entry point: sensitivity, step noise and final noise come from
// streams keyed by (seed, replication, user).
inline Trajectory RunSequentialAgent(const AgentConfig& cfg, const ModifiedWorld& world,
                                     double yhat, std::span<const double> x,
                                     std::uint64_t seed, std::uint64_t user_id = 0,
                                     std::uint64_t replication = 0) {
  RandomStream us({seed, Purpose::kSensitivity, replication, user_id, 0});
  RandomStream steps({seed, Purpose::kStepNoise, replication, user_id, 0});
  RandomStream zs({seed, Purpose::kOutcome, replication, user_id, 0});
  const double u = world.DrawSensitivity(us);
  const double z = UnitNoise(world.truth().noise_law, zs);
  return RunSequentialAgent(cfg, world, yhat, x, u, steps, z, user_id);
}

struct CateEstimate {
  Estimate monte_carlo;
  std::optional<double> analytic;
};

// Paired (common random number) estimate of E[y_tilde - y | x] for a fixed
// prediction y_hat. Both arms share sensitivity and outcome noise draws.
inline CateEstimate TrueCate(const ModifiedWorld& world, const InterventionPolicy& policy,
                             double yhat, std::span<const double> x, std::size_t reps,
                             std::uint64_t seed, std::optional<double> bias = std::nullopt) {
  policy.Validate();
  if (reps < 2) throw InputError("true_cate: reps must be >= 2");
  const auto& truth = world.truth();
  const double fx = truth.true_fn(x);
  const PolicyContext ctx = world.Context(bias);
  std::vector<double> diffs(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    RandomStream us({seed, Purpose::kSensitivity, r, 0, 0});
    RandomStream zs({seed, Purpose::kTestNoise, r, 0, 0});
    RandomStream vs({seed, Purpose::kPolicyNoise, r, 0, 0});
    const double u = world.DrawSensitivity(us);
    const double z = UnitNoise(truth.noise_law, zs);
    const double y = fx + truth.noise_sd * z;
    double yt;
    if (policy.kind == InterventionPolicy::Kind::kSequentialAgent) {
      RandomStream steps({seed, Purpose::kStepNoise, r, 0, 0});
      yt = RunSequentialAgent(policy.agent, world, yhat, x, u, steps, z).outcome;
    } else {
      const Intervention b = ComputeIntervention(policy, yhat, x, y, ctx, vs);
      yt = world.Realize(b, x, yhat, u, z);
    }
    diffs[r] = yt - y;
  }
  CateEstimate out;
  out.monte_carlo = MeanEstimate(diffs);
  switch (policy.kind) {
    case InterventionPolicy::Kind::kIdle: out.analytic = 0.0; break;
    case InterventionPolicy::Kind::kConstantShift:
    case InterventionPolicy::Kind::kOracleCounterBias: {
      RandomStream none({seed, Purpose::kPolicyNoise, 0, 0, 0});
      InterventionPolicy noiseless = policy;
      noiseless.policy_noise_sd = 0.0;
      const Intervention b = ComputeIntervention(noiseless, yhat, x, fx, ctx, none);
      out.analytic = ExpectedModifiedMean(world, policy, b, x, yhat) - fx;
      break;
    }
    case InterventionPolicy::Kind::kShrinkage: out.analytic = policy.lambda * (yhat - fx); break;
    case InterventionPolicy::Kind::kSequentialAgent: break;
  }
  return out;
}

}  // namespace pmlab
