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

// Monte Carlo estimation of EPE(x) and the modified EPE(x) with their
// components, term-level identity checks, the modified-minus-unmodified
// delta, the optimal constant shift and the improvement region.
//
// Every replication r trains a fresh model, fixes y_hat_r = f_hat_r(x), and
// draws one test outcome y_r = f(x) + sigma z_r. Each policy then realizes
// y_tilde_r from the same z_r, sensitivity and policy-noise streams, so all
// policies in one run share common random numbers.

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

#include "pmlab/bmod.hpp"
#include "pmlab/errors.hpp"
#include "pmlab/parallel.hpp"
#include "pmlab/predictor.hpp"
#include "pmlab/rng.hpp"
#include "pmlab/stats.hpp"
#include "pmlab/worldgen.hpp"

namespace pmlab {

struct McOptions {
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  // Bias estimate handed to oracle policies; estimated by a pilot run if unset.
  std::optional<double> bias_hint;
  std::size_t pilot_reps = 0;  // 0: max(100, reps / 10)
};

struct DecompositionReport {
  std::vector<double> probe_x;
  std::string model;
  std::string policy;  // empty for an unmodified report
  std::size_t n_train = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;

  double sigma2_known = 0.0;
  Estimate sigma2;           // empirical E[(y - f)^2]
  Estimate bias;             // f(x) - E[f_hat(x)]
  Estimate var_fhat;
  Estimate mean_prediction;
  Estimate epe_direct;       // E[(y - f_hat)^2]
  Estimate epe_recomposed;   // sigma2 + bias^2 + var
  Estimate epe_residual;     // direct - recomposed, paired SE
  Estimate cross_term;       // E[(y - f)(f - f_hat)]
  Estimate mean_noise;       // E[y - f]

  std::optional<Estimate> sigma2_tilde;         // E[(y_tilde - f_do)^2]
  std::optional<Estimate> cate;                 // E[y_tilde - y]
  std::optional<Estimate> epe_tilde_direct;     // E[(y_tilde - f_hat)^2]
  std::optional<Estimate> epe_tilde_recomposed; // sigma2_tilde + (cate + bias)^2 + var
  std::optional<Estimate> epe_tilde_residual;
  std::optional<Estimate> cross_term_tilde;     // E[(y_tilde - f_do)(f_do - f_hat)]
  std::optional<Estimate> mean_noise_tilde;     // E[y_tilde - f_do]
  std::optional<Estimate> delta_direct;         // E[(y_tilde - f_hat)^2 - (y - f_hat)^2]
  std::optional<Estimate> delta_formula;        // sigma2_tilde - sigma2 + cate^2 + 2 cate bias
  std::optional<Estimate> delta_gap;            // direct - formula, paired SE

  bool modified() const { return cate.has_value(); }
};

// Per-replication draws shared by every policy in a run.
struct Replications {
  double fx = 0.0;
  std::vector<double> yhat;
  std::vector<double> y;
  std::vector<std::vector<double>> y_tilde;  // [policy][rep]
  std::vector<std::vector<double>> f_do;     // [policy][rep]
};

namespace internal {

inline double ResolveBias(const GroundTruth& truth, const ModelSpec& spec, std::size_t n_train,
                          std::span<const double> x, const McOptions& opt) {
  if (opt.bias_hint) return *opt.bias_hint;
  const std::size_t pilot = opt.pilot_reps ? opt.pilot_reps : std::max<std::size_t>(100, opt.reps / 10);
  return EstimateBiasVariance(spec, truth, n_train, x, pilot, DeriveSeed(opt.seed, "pilot"),
                              opt.workers)
      .bias.value;
}

}  // namespace internal

inline Replications SimulateReplications(const GroundTruth& truth, const ModelSpec& spec,
                                         std::span<const InterventionPolicy> policies,
                                         std::size_t n_train, std::span<const double> x,
                                         const McOptions& opt) {
  truth.Validate();
  spec.Validate();
  for (const auto& p : policies) p.Validate();
  if (x.size() != truth.dims()) throw InputError("probe x has the wrong dimension");
  const ModifiedWorld world(truth);

  std::optional<double> bias;
  for (const auto& p : policies) {
    if (p.kind == InterventionPolicy::Kind::kOracleCounterBias) {
      bias = internal::ResolveBias(truth, spec, n_train, x, opt);
      break;
    }
  }
  const PolicyContext ctx = world.Context(bias);

  const std::size_t reps = opt.reps;
  const std::size_t np = policies.size();
  Replications out;
  out.fx = truth.true_fn(x);
  out.yhat.resize(reps);
  out.y.resize(reps);
  out.y_tilde.assign(np, std::vector<double>(reps));
  out.f_do.assign(np, std::vector<double>(reps));

  ParallelFor(reps, opt.workers, [&](std::size_t r) {
    const TrainedModel model = TrainReplication(spec, truth, n_train, opt.seed, r);
    const double yhat = model.Predict(x);
    RandomStream zs({opt.seed, Purpose::kTestNoise, r, 0, 0});
    RandomStream us({opt.seed, Purpose::kSensitivity, r, 0, 0});
    const double z = UnitNoise(truth.noise_law, zs);
    const double u = world.DrawSensitivity(us);
    const double y = out.fx + truth.noise_sd * z;
    out.yhat[r] = yhat;
    out.y[r] = y;
    for (std::size_t k = 0; k < np; ++k) {
      const auto& policy = policies[k];
      if (policy.kind == InterventionPolicy::Kind::kSequentialAgent) {
        RandomStream steps({opt.seed, Purpose::kStepNoise, r, 0, 0});
        const Trajectory tr = RunSequentialAgent(policy.agent, world, yhat, x, u, steps, z);
        out.y_tilde[k][r] = tr.outcome;
        out.f_do[k][r] = out.fx + truth.sensitivity.Mean() *
                                      truth.dose_response.Curve(tr.final_intervention);
        continue;
      }
      RandomStream vs({opt.seed, Purpose::kPolicyNoise, r, 0, 0});
      const Intervention b = ComputeIntervention(policy, yhat, x, y, ctx, vs);
      out.y_tilde[k][r] = world.Realize(b, x, yhat, u, z);
      out.f_do[k][r] = ExpectedModifiedMean(world, policy, b, x, yhat);
    }
  });
  return out;
}

namespace internal {

// Fills the unmodified fields from the shared replications.
inline DecompositionReport SummarizeUnmodified(const GroundTruth& truth, const ModelSpec& spec,
                                               std::size_t n_train, std::span<const double> x,
                                               const McOptions& opt, const Replications& reps) {
  const std::size_t n = reps.yhat.size();
  const double fx = reps.fx;
  DecompositionReport rep;
  rep.probe_x.assign(x.begin(), x.end());
  rep.model = spec.Name();
  rep.n_train = n_train;
  rep.reps = n;
  rep.seed = opt.seed;
  rep.sigma2_known = truth.noise_sd * truth.noise_sd;

  const BiasVariance bv = SummarizePredictions(reps.yhat, fx);
  rep.mean_prediction = bv.mean_prediction;
  rep.bias = bv.bias;
  rep.var_fhat = bv.variance;
  const double pbar = bv.mean_prediction.value;
  const double B = bv.bias.value;

  std::vector<double> e(n), s(n), resid(n), rec(n), cross(n), noise(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double p = reps.yhat[r];
    const double eps = reps.y[r] - fx;
    e[r] = eps * eps;
    s[r] = (reps.y[r] - p) * (reps.y[r] - p);
    rec[r] = e[r] - 2.0 * B * p + (p - pbar) * (p - pbar);
    resid[r] = s[r] - rec[r];
    cross[r] = eps * (fx - p);
    noise[r] = eps;
  }
  rep.sigma2 = MeanEstimate(e);
  rep.epe_direct = MeanEstimate(s);
  const double recomposed = rep.sigma2.value + B * B + rep.var_fhat.value;
  rep.epe_recomposed = {recomposed, BatchMeansSE(rec)};
  rep.epe_residual = {rep.epe_direct.value - recomposed, BatchMeansSE(resid)};
  rep.cross_term = MeanEstimate(cross);
  rep.mean_noise = MeanEstimate(noise);
  return rep;
}

inline void SummarizeModified(DecompositionReport& rep, const InterventionPolicy& policy,
                              const Replications& reps, std::size_t k) {
  const std::size_t n = reps.yhat.size();
  const double fx = reps.fx;
  const auto& yt = reps.y_tilde[k];
  const auto& fdo = reps.f_do[k];
  rep.policy = policy.Name();

  std::vector<double> d(n), et(n), st(n);
  for (std::size_t r = 0; r < n; ++r) {
    d[r] = yt[r] - reps.y[r];
    et[r] = (yt[r] - fdo[r]) * (yt[r] - fdo[r]);
    st[r] = (yt[r] - reps.yhat[r]) * (yt[r] - reps.yhat[r]);
  }
  const Estimate cate = MeanEstimate(d);
  const Estimate s2t = MeanEstimate(et);
  const double C = cate.value;
  const double B = rep.bias.value;
  const double pbar = rep.mean_prediction.value;
  const double V = rep.var_fhat.value;

  std::vector<double> rec(n), resid(n), cross(n), noise(n), ddir(n), dform(n), gap(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double p = reps.yhat[r];
    const double eps = reps.y[r] - fx;
    const double e = eps * eps;
    const double s = (reps.y[r] - p) * (reps.y[r] - p);
    rec[r] = et[r] + 2.0 * (C + B) * (d[r] - p) + (p - pbar) * (p - pbar);
    resid[r] = st[r] - rec[r];
    cross[r] = (yt[r] - fdo[r]) * (fdo[r] - p);
    noise[r] = yt[r] - fdo[r];
    ddir[r] = st[r] - s;
    dform[r] = et[r] - e + 2.0 * (C + B) * d[r] - 2.0 * C * p;
    gap[r] = ddir[r] - dform[r];
  }
  const Estimate direct = MeanEstimate(st);
  const double recomposed = s2t.value + (C + B) * (C + B) + V;
  const double formula = s2t.value - rep.sigma2.value + C * C + 2.0 * C * B;
  const Estimate dd = MeanEstimate(ddir);

  rep.sigma2_tilde = s2t;
  rep.cate = cate;
  rep.epe_tilde_direct = direct;
  rep.epe_tilde_recomposed = Estimate{recomposed, BatchMeansSE(rec)};
  rep.epe_tilde_residual = Estimate{direct.value - recomposed, BatchMeansSE(resid)};
  rep.cross_term_tilde = MeanEstimate(cross);
  rep.mean_noise_tilde = MeanEstimate(noise);
  rep.delta_direct = dd;
  rep.delta_formula = Estimate{formula, BatchMeansSE(dform)};
  rep.delta_gap = Estimate{dd.value - formula, BatchMeansSE(gap)};
}

inline void RequireReps(std::size_t reps) {
  if (reps < 100) throw InputError("decomposition needs reps >= 100 for standard errors");
}

}  // namespace internal

inline DecompositionReport EpeUnmodified(const GroundTruth& truth, const ModelSpec& spec,
                                         std::size_t n_train, std::span<const double> x,
                                         const McOptions& opt) {
  internal::RequireReps(opt.reps);
  const Replications reps = SimulateReplications(truth, spec, {}, n_train, x, opt);
  return internal::SummarizeUnmodified(truth, spec, n_train, x, opt, reps);
}

// One report per policy, all sharing training draws and test noise.
inline std::vector<DecompositionReport> EpeModifiedMany(
    const GroundTruth& truth, const ModelSpec& spec,
    std::span<const InterventionPolicy> policies, std::size_t n_train,
    std::span<const double> x, const McOptions& opt) {
  internal::RequireReps(opt.reps);
  const Replications reps = SimulateReplications(truth, spec, policies, n_train, x, opt);
  const DecompositionReport base = internal::SummarizeUnmodified(truth, spec, n_train, x, opt, reps);
  std::vector<DecompositionReport> out;
  out.reserve(policies.size());
  for (std::size_t k = 0; k < policies.size(); ++k) {
    out.push_back(base);
    internal::SummarizeModified(out.back(), policies[k], reps, k);
  }
  return out;
}

// Training uses unmodified data; y_hat is fixed before the policy acts.
inline DecompositionReport EpeModified(const GroundTruth& truth, const ModelSpec& spec,
                                       const InterventionPolicy& policy, std::size_t n_train,
                                       std::span<const double> x, const McOptions& opt) {
  const InterventionPolicy one[] = {policy};
  return EpeModifiedMany(truth, spec, one, n_train, x, opt).front();
}

struct TermCheck {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  bool pass = false;
};

struct IdentityCheck {
  std::vector<TermCheck> terms;
  bool pass = false;
};

namespace internal {

inline TermCheck CheckZero(std::string name, double value, double se, double tol, double scale) {
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
  return {std::move(name), value, se, std::fabs(value) <= tol * se + floor};
}

}  // namespace internal

// Recomputes the recomposed value from the report's components, so a
// corrupted component shows up as a failing residual.
inline IdentityCheck VerifyIdentity(const DecompositionReport& r, double tol_se_multiple) {
  IdentityCheck out;
  if (r.modified()) {
    const double recomposed = r.sigma2_tilde->value +
                              std::pow(r.cate->value + r.bias.value, 2) + r.var_fhat.value;
    const double direct = r.epe_tilde_direct->value;
    out.terms.push_back(internal::CheckZero("epe_tilde_direct_minus_recomposed",
                                            direct - recomposed, r.epe_tilde_residual->se,
                                            tol_se_multiple, direct));
    out.terms.push_back(internal::CheckZero("cross_term", r.cross_term_tilde->value,
                                            r.cross_term_tilde->se, tol_se_multiple, direct));
    out.terms.push_back(internal::CheckZero("mean_noise_tilde", r.mean_noise_tilde->value,
                                            r.mean_noise_tilde->se, tol_se_multiple, 1.0));
  } else {
    const double recomposed = r.sigma2.value + r.bias.value * r.bias.value + r.var_fhat.value;
    const double direct = r.epe_direct.value;
    out.terms.push_back(internal::CheckZero("epe_direct_minus_recomposed", direct - recomposed,
                                            r.epe_residual.se, tol_se_multiple, direct));
    out.terms.push_back(internal::CheckZero("cross_term", r.cross_term.value, r.cross_term.se,
                                            tol_se_multiple, direct));
    out.terms.push_back(internal::CheckZero("mean_noise", r.mean_noise.value, r.mean_noise.se,
                                            tol_se_multiple, 1.0));
  }
  out.pass = std::all_of(out.terms.begin(), out.terms.end(), [](const TermCheck& t) { return t.pass; });
  return out;
}

struct DeltaSummary {
  Estimate direct;   // measured modified EPE minus EPE
  Estimate formula;  // sigma2_tilde - sigma2 + CATE^2 + 2 CATE Bias
  Estimate gap;      // direct - formula
};

// Both reports must come from the same probe, model, n_train, seed and reps.
inline DeltaSummary DeltaEpe(const DecompositionReport& unmodified,
                             const DecompositionReport& modified) {
  if (!modified.modified()) throw InputError("delta_epe: second report has no modified fields");
  if (unmodified.probe_x != modified.probe_x || unmodified.model != modified.model ||
      unmodified.n_train != modified.n_train || unmodified.seed != modified.seed ||
      unmodified.reps != modified.reps) {
    throw InputError("delta_epe: reports differ in probe, model, n_train, seed or reps");
  }
  if (unmodified.epe_direct.value != modified.epe_direct.value) {
    throw InputError("delta_epe: reports do not share random streams");
  }
  return {*modified.delta_direct, *modified.delta_formula, *modified.delta_gap};
}

struct ShiftCurve {
  std::vector<double> shifts;
  std::vector<Estimate> epe_tilde;
  std::vector<Estimate> delta;  // paired modified-minus-unmodified
  std::vector<Estimate> second_difference;
  Estimate epe;
  Estimate bias;
  double argmin = 0.0;
  std::size_t argmin_index = 0;
  bool argmin_on_boundary = false;
};

inline std::vector<double> MakeGrid(double lower, double upper, double step) {
  if (!(step > 0.0) || !(upper >= lower)) throw InputError("grid needs step > 0 and upper >= lower");
  const auto count = static_cast<std::size_t>(std::floor((upper - lower) / step + 1e-9)) + 1;
  std::vector<double> g(count);
  // Snap to 12 decimals so 0.08 prints as 0.08, not 0.08000000000000002.
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = std::round((lower + static_cast<double>(i) * step) * 1e12) / 1e12;
  }
  return g;
}

// Builds the curve from replications whose policies first..first+grid.size()-1
// are the constant shifts in `shift_grid`.
inline ShiftCurve ShiftCurveFrom(const Replications& reps, const DecompositionReport& base,
                                 std::span<const double> shift_grid, std::size_t first) {
  ShiftCurve c;
  c.shifts.assign(shift_grid.begin(), shift_grid.end());
  c.epe = base.epe_direct;
  c.bias = base.bias;
  const std::size_t n = reps.yhat.size();
  const std::size_t m = shift_grid.size();
  std::vector<std::vector<double>> sq(m, std::vector<double>(n));
  for (std::size_t k = 0; k < m; ++k) {
    const auto& yt = reps.y_tilde[first + k];
    std::vector<double> dd(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double et = yt[r] - reps.yhat[r];
      const double e = reps.y[r] - reps.yhat[r];
      sq[k][r] = et * et;
      dd[r] = et * et - e * e;
    }
    c.epe_tilde.push_back(MeanEstimate(sq[k]));
    c.delta.push_back(MeanEstimate(dd));
  }
  for (std::size_t k = 1; k + 1 < m; ++k) {
    std::vector<double> d2(n);
    for (std::size_t r = 0; r < n; ++r) d2[r] = sq[k - 1][r] - 2.0 * sq[k][r] + sq[k + 1][r];
    c.second_difference.push_back(MeanEstimate(d2));
  }
  for (std::size_t k = 1; k < m; ++k) {
    if (c.epe_tilde[k].value < c.epe_tilde[c.argmin_index].value) c.argmin_index = k;
  }
  c.argmin = c.shifts[c.argmin_index];
  c.argmin_on_boundary = c.argmin_index == 0 || c.argmin_index + 1 == m;
  return c;
}

// Modified EPE at each constant shift with common random numbers.
inline ShiftCurve OptimalConstantShift(const GroundTruth& truth, const ModelSpec& spec,
                                       std::size_t n_train, std::span<const double> x,
                                       std::span<const double> shift_grid, const McOptions& opt) {
  internal::RequireReps(opt.reps);
  if (shift_grid.empty()) throw InputError("optimal_constant_shift: empty shift grid");
  const double m0 = truth.dose_response.NoiseMultiplier(shift_grid.front());
  for (double b : shift_grid) {
    if (truth.dose_response.NoiseMultiplier(b) != m0) {
      throw ConfigError("optimal_constant_shift: sigma_tilde must be constant across the grid");
    }
  }
  std::vector<InterventionPolicy> policies;
  for (double b : shift_grid) policies.push_back(InterventionPolicy::ConstantShift(b));
  const Replications reps = SimulateReplications(truth, spec, policies, n_train, x, opt);
  const DecompositionReport base =
      internal::SummarizeUnmodified(truth, spec, n_train, x, opt, reps);
  return ShiftCurveFrom(reps, base, shift_grid, 0);
}

struct RegionEntry {
  double cate = 0.0;
  double delta = 0.0;  // modified EPE minus EPE
  bool improving = false;
};

struct ImprovementRegion {
  std::vector<RegionEntry> entries;
  // Open interval of CATE values with delta < 0, if non-empty.
  std::optional<std::pair<double, double>> interval;
};

// Classifies CATE values by sign of sigma2_tilde - sigma2 + c^2 + 2 c Bias.
inline ImprovementRegion ImprovementRegionFor(double bias, double sigma2, double sigma2_tilde,
                                              std::span<const double> cate_grid) {
  ImprovementRegion out;
  const double k = sigma2_tilde - sigma2;
  for (double c : cate_grid) {
    const double delta = k + c * c + 2.0 * c * bias;
    out.entries.push_back({c, delta, delta < 0.0});
  }
  const double disc = bias * bias - k;
  if (disc > 0.0) {
    const double h = std::sqrt(disc);
    out.interval = std::make_pair(-bias - h, -bias + h);
  }
  return out;
}

}  // namespace pmlab
