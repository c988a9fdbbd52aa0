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

// Config-driven experiment runner: executes a preset, writes result tables,
// the canonical config and a manifest, and maps failures to exit codes.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmlab/bmod.hpp"
#include "pmlab/config.hpp"
#include "pmlab/decomposition.hpp"
#include "pmlab/errors.hpp"
#include "pmlab/output.hpp"
#include "pmlab/showcase.hpp"

#ifndef PMLAB_VERSION
#define PMLAB_VERSION "0.1.0"
#endif

namespace pmlab {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitIo = 3, kExitInternal = 4 };

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  std::optional<std::string> format;
};

// A named result table plus the experiment's machine-checkable claims.
struct ExperimentResult {
  std::vector<std::pair<std::string, Table>> tables;
  std::optional<std::string> users_jsonl;
};

namespace internal {

inline std::string ProbeText(const std::vector<double>& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ';';
    s += FormatNumber(x[i]);
  }
  return s;
}

inline Table DecompositionTable() {
  return Table({"x", "policy", "model", "n_train", "reps",
                "sigma2", "sigma2_se", "sigma2_tilde", "sigma2_tilde_se",
                "bias", "bias_se", "var_fhat", "var_fhat_se", "cate", "cate_se",
                "epe", "epe_se", "epe_tilde", "epe_tilde_se",
                "epe_residual", "epe_residual_se",
                "epe_tilde_recomposed", "epe_tilde_residual", "epe_tilde_residual_se",
                "cross_term_tilde", "cross_term_tilde_se",
                "delta", "delta_se", "delta_formula", "delta_gap", "delta_gap_se"});
}

inline void AddDecompositionRow(Table& t, const DecompositionReport& r) {
  auto v = [](const std::optional<Estimate>& e) { return e ? Cell{e->value} : Cell{}; };
  auto se = [](const std::optional<Estimate>& e) { return e ? Cell{e->se} : Cell{}; };
  t.AddRow({ProbeText(r.probe_x), r.policy.empty() ? "none" : r.policy, r.model,
            static_cast<std::uint64_t>(r.n_train), static_cast<std::uint64_t>(r.reps),
            r.sigma2.value, r.sigma2.se, v(r.sigma2_tilde), se(r.sigma2_tilde),
            r.bias.value, r.bias.se, r.var_fhat.value, r.var_fhat.se, v(r.cate), se(r.cate),
            r.epe_direct.value, r.epe_direct.se, v(r.epe_tilde_direct), se(r.epe_tilde_direct),
            r.epe_residual.value, r.epe_residual.se,
            v(r.epe_tilde_recomposed), v(r.epe_tilde_residual), se(r.epe_tilde_residual),
            v(r.cross_term_tilde), se(r.cross_term_tilde),
            v(r.delta_direct), se(r.delta_direct), v(r.delta_formula), v(r.delta_gap),
            se(r.delta_gap)});
}

inline Table ClaimsTable() {
  return Table({"x", "claim", "statistic", "value", "se", "reference", "pass"});
}

inline Table ShiftCurveTable() {
  return Table({"x", "shift", "epe_tilde", "epe_tilde_se", "delta", "delta_se",
                "delta_analytic", "improving", "improving_analytic"});
}

// Delta implied by the decomposition with the run's bias estimate.
inline double AnalyticShiftDelta(const GroundTruth& truth, double shift, double bias) {
  const double s2 = truth.noise_sd * truth.noise_sd;
  const double g = truth.dose_response.Curve(shift);
  const double m = truth.dose_response.NoiseMultiplier(shift);
  const double c = truth.sensitivity.Mean() * g;
  const double var_u = SensitivityVariance(truth.sensitivity);
  return m * m * s2 + var_u * g * g - s2 + c * c + 2.0 * c * bias;
}

inline void AddShiftCurve(Table& t, const GroundTruth& truth, const std::vector<double>& x,
                          const ShiftCurve& c) {
  for (std::size_t k = 0; k < c.shifts.size(); ++k) {
    const double analytic = AnalyticShiftDelta(truth, c.shifts[k], c.bias.value);
    t.AddRow({ProbeText(x), c.shifts[k], c.epe_tilde[k].value, c.epe_tilde[k].se,
              c.delta[k].value, c.delta[k].se, analytic, c.delta[k].value < 0.0, analytic < 0.0});
  }
}

inline McOptions Mc(const ExperimentConfig& c) {
  McOptions o;
  o.reps = c.reps;
  o.seed = c.seed;
  o.workers = c.workers;
  return o;
}

inline ShowcaseConfig Showcase(const ExperimentConfig& c) {
  ShowcaseConfig s;
  s.world = c.world;
  s.model = c.model;
  s.policy = c.policy;
  s.n_train = c.n_train;
  s.n_showcase = c.n_showcase;
  s.horizon_steps = c.horizon_steps;
  s.n_fresh = c.n_fresh;
  s.seed = c.seed;
  s.customer_effect = c.customer_effect;
  s.ab_replicates = c.ab_replicates;
  s.bias_models = c.bias_models;
  s.workers = c.workers;
  return s;
}

inline std::string UsersJsonl(const std::vector<UserRecord>& users) {
  std::string out;
  for (const auto& u : users) {
    nlohmann::ordered_json j;
    j["id"] = u.id;
    j["x"] = u.x;
    j["prediction"] = u.prediction;
    j["current_outcome"] = u.current_outcome;
    j["intervention"] = u.intervention;
    j["outcome"] = u.outcome;
    j["error"] = u.error;
    if (u.trajectory) {
      auto steps = nlohmann::ordered_json::array();
      for (const auto& s : u.trajectory->steps) {
        steps.push_back({{"step", s.step}, {"action", s.action},
                         {"observation", s.observation}, {"reward", s.reward}});
      }
      j["sensitivity"] = u.trajectory->sensitivity;
      j["trajectory"] = std::move(steps);
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline ExperimentResult RunDecompose(const ExperimentConfig& c) {
  Table t = DecompositionTable();
  const InterventionPolicy policies[] = {c.policy};
  for (const auto& x : c.probes) {
    for (const auto& r : EpeModifiedMany(c.world, c.model, policies, c.n_train, x, Mc(c))) {
      AddDecompositionRow(t, r);
    }
  }
  ExperimentResult out;
  out.tables.emplace_back("decomposition", std::move(t));
  return out;
}

inline std::vector<double> ShiftGrid(const ExperimentConfig& c) {
  return MakeGrid(c.shift_grid.lower, c.shift_grid.upper, c.shift_grid.step);
}

inline ExperimentResult RunOptimalShift(const ExperimentConfig& c) {
  const std::vector<double> grid = ShiftGrid(c);
  Table curve = ShiftCurveTable();
  Table claims = ClaimsTable();
  for (const auto& x : c.probes) {
    const ShiftCurve sc = OptimalConstantShift(c.world, c.model, c.n_train, x, grid, Mc(c));
    AddShiftCurve(curve, c.world, x, sc);
    const double target = -sc.bias.value / c.world.sensitivity.Mean();
    claims.AddRow({ProbeText(x), "argmin_equals_minus_bias", "argmin_shift", sc.argmin,
                   Cell{}, target,
                   !sc.argmin_on_boundary &&
                       std::fabs(sc.argmin - target) <= c.shift_grid.step * (1 + 1e-9)});
    std::int64_t mismatches = 0;
    for (std::size_t k = 0; k < sc.shifts.size(); ++k) {
      const double analytic = AnalyticShiftDelta(c.world, sc.shifts[k], sc.bias.value);
      if (std::fabs(analytic) <= 1e-15) continue;  // boundary point
      mismatches += (sc.delta[k].value < 0.0) != (analytic < 0.0);
    }
    claims.AddRow({ProbeText(x), "improvement_region_matches", "mismatched_grid_points",
                   static_cast<double>(mismatches), Cell{}, 0.0, mismatches == 0});
  }
  ExperimentResult out;
  out.tables.emplace_back("shift_curve", std::move(curve));
  out.tables.emplace_back("claims", std::move(claims));
  return out;
}

inline ExperimentResult RunShowcaseExperiment(const ExperimentConfig& c) {
  const ShowcaseResult r = RunShowcase(Showcase(c));
  double mean_b = 0.0;
  for (const auto& u : r.users) mean_b += u.intervention;
  mean_b /= static_cast<double>(r.users.size());
  Table s({"policy", "model", "n_train", "n_showcase", "mse", "mean_intervention"});
  s.AddRow({r.policy, r.model, static_cast<std::uint64_t>(c.n_train),
            static_cast<std::uint64_t>(c.n_showcase), r.mse, mean_b});
  ExperimentResult out;
  out.tables.emplace_back("summary", std::move(s));
  out.users_jsonl = UsersJsonl(r.users);
  return out;
}

inline ExperimentResult RunGeneralization(const ExperimentConfig& c) {
  const GeneralizationReport g = CompareGeneralization(Showcase(c));
  Table s({"policy", "model", "n_train", "n_showcase", "showcase_mse", "fresh_mse", "ratio",
           "predicted_showcase_mse", "predicted_fresh_mse", "predicted_ratio", "control"});
  s.AddRow({g.showcase.policy, g.showcase.model, static_cast<std::uint64_t>(c.n_train),
            static_cast<std::uint64_t>(c.n_showcase), g.showcase_mse, g.fresh_mse, g.ratio,
            OptionalCell(g.predicted_showcase_mse), g.predicted_fresh_mse,
            OptionalCell(g.predicted_ratio), g.control});
  ExperimentResult out;
  out.tables.emplace_back("summary", std::move(s));
  out.users_jsonl = UsersJsonl(g.showcase.users);
  return out;
}

inline ExperimentResult RunAb(const ExperimentConfig& c) {
  const AbTestReport r = RunAbTest(Showcase(c));
  Table reps({"replicate", "arm", "difference", "t", "df", "p_value"});
  for (std::size_t i = 0; i < r.bmod_on.size(); ++i) {
    const auto& a = r.bmod_on[i];
    reps.AddRow({static_cast<std::uint64_t>(i), "bmod_on", a.difference, a.t, a.df, a.p_value});
  }
  for (std::size_t i = 0; i < r.bmod_off.size(); ++i) {
    const auto& a = r.bmod_off[i];
    reps.AddRow({static_cast<std::uint64_t>(i), "bmod_off", a.difference, a.t, a.df, a.p_value});
  }
  Table s({"policy", "size_a", "size_b", "replicates", "customer_effect", "rejection_rate_on",
           "rejection_rate_off", "mean_difference_on", "mean_difference_on_se",
           "mean_difference_off", "mean_difference_off_se", "variance_ratio", "ks_distance",
           "ks_critical_0.01"});
  s.AddRow({c.policy.Name(), static_cast<std::uint64_t>(r.size_a),
            static_cast<std::uint64_t>(r.size_b), static_cast<std::uint64_t>(r.bmod_on.size()),
            c.customer_effect, r.rejection_rate_on, r.rejection_rate_off,
            r.mean_difference_on.value, r.mean_difference_on.se, r.mean_difference_off.value,
            r.mean_difference_off.se, r.variance_ratio, r.ks_distance, r.ks_critical});
  ExperimentResult out;
  out.tables.emplace_back("replicates", std::move(reps));
  out.tables.emplace_back("summary", std::move(s));
  return out;
}

// Low-bias model: constant shifts cannot help at a zero-bias probe, shrinkage can.
inline ExperimentResult RunScenario1(const ExperimentConfig& c) {
  std::vector<InterventionPolicy> shifts, shrink;
  for (double d : {-0.1, -0.05, -0.02, -0.01, 0.01, 0.02, 0.05, 0.1}) {
    shifts.push_back(InterventionPolicy::ConstantShift(d));
  }
  for (double l : {0.25, 0.5, 0.9}) shrink.push_back(InterventionPolicy::Shrinkage(l));
  std::vector<InterventionPolicy> all = shifts;
  all.insert(all.end(), shrink.begin(), shrink.end());

  Table t = DecompositionTable();
  Table claims = ClaimsTable();
  for (const auto& x : c.probes) {
    const auto reports = EpeModifiedMany(c.world, c.model, all, c.n_train, x, Mc(c));
    for (const auto& r : reports) AddDecompositionRow(t, r);
    const auto& bias = reports.front().bias;
    claims.AddRow({ProbeText(x), "bias_indistinguishable_from_zero", "bias", bias.value, bias.se,
                   0.0, std::fabs(bias.value) <= 3.0 * bias.se});
    const auto min_shift = std::min_element(
        reports.begin(), reports.begin() + static_cast<std::ptrdiff_t>(shifts.size()),
        [](const auto& a, const auto& b) { return a.delta_direct->value < b.delta_direct->value; });
    claims.AddRow({ProbeText(x), "constant_shift_never_improves", "min_delta_" + min_shift->policy,
                   min_shift->delta_direct->value, min_shift->delta_direct->se, 0.0,
                   min_shift->delta_direct->value > 0.0});
    const auto max_shrink = std::max_element(
        reports.begin() + static_cast<std::ptrdiff_t>(shifts.size()), reports.end(),
        [](const auto& a, const auto& b) { return a.delta_direct->value < b.delta_direct->value; });
    claims.AddRow({ProbeText(x), "shrinkage_improves", "max_delta_" + max_shrink->policy,
                   max_shrink->delta_direct->value, max_shrink->delta_direct->se, 0.0,
                   max_shrink->delta_direct->value < 0.0});
  }
  ExperimentResult out;
  out.tables.emplace_back("decomposition", std::move(t));
  out.tables.emplace_back("claims", std::move(claims));
  return out;
}

// High-bias model: the best constant shift has the sign of -Bias.
inline ExperimentResult RunScenario2(const ExperimentConfig& c) {
  const std::vector<double> grid = ShiftGrid(c);
  std::vector<InterventionPolicy> policies = {c.policy};
  for (double b : grid) policies.push_back(InterventionPolicy::ConstantShift(b));

  Table t = DecompositionTable();
  Table curve = ShiftCurveTable();
  Table claims = ClaimsTable();
  for (const auto& x : c.probes) {
    const McOptions opt = Mc(c);
    const Replications reps = SimulateReplications(c.world, c.model, policies, c.n_train, x, opt);
    DecompositionReport r = SummarizeUnmodified(c.world, c.model, c.n_train, x, opt, reps);
    const DecompositionReport base = r;
    SummarizeModified(r, policies[0], reps, 0);
    AddDecompositionRow(t, r);
    const ShiftCurve sc = ShiftCurveFrom(reps, base, grid, 1);
    AddShiftCurve(curve, c.world, x, sc);
    const bool biased = std::fabs(base.bias.value) > 3.0 * base.bias.se &&
                        std::fabs(base.bias.value) > c.shift_grid.step;
    if (biased) {
      const bool matched = !sc.argmin_on_boundary && sc.argmin != 0.0 &&
                           std::signbit(sc.argmin) == std::signbit(-base.bias.value);
      claims.AddRow({ProbeText(x), "optimal_shift_sign_matches_minus_bias", "argmin_shift",
                     sc.argmin, Cell{}, -base.bias.value, matched});
    } else {
      claims.AddRow({ProbeText(x), "zero_bias_probe_optimal_shift_near_zero", "argmin_shift",
                     sc.argmin, Cell{}, -base.bias.value,
                     std::fabs(sc.argmin + base.bias.value) <= c.shift_grid.step * (1 + 1e-9)});
    }
    claims.AddRow({ProbeText(x), "policy_does_not_worsen_epe", "delta_" + r.policy,
                   r.delta_direct->value, r.delta_direct->se, 0.0,
                   r.delta_direct->value <= 3.0 * r.delta_direct->se});
  }
  ExperimentResult out;
  out.tables.emplace_back("decomposition", std::move(t));
  out.tables.emplace_back("shift_curve", std::move(curve));
  out.tables.emplace_back("claims", std::move(claims));
  return out;
}

// High-variance model: Var(f_hat) dominates EPE at the first probe.
inline ExperimentResult RunScenario3(const ExperimentConfig& c) {
  Table t = DecompositionTable();
  Table claims = ClaimsTable();
  const InterventionPolicy policies[] = {c.policy};
  for (std::size_t i = 0; i < c.probes.size(); ++i) {
    const auto& x = c.probes[i];
    const DecompositionReport r =
        EpeModifiedMany(c.world, c.model, policies, c.n_train, x, Mc(c)).front();
    AddDecompositionRow(t, r);
    const double share = r.var_fhat.value / r.epe_direct.value;
    claims.AddRow({ProbeText(x), i == 0 ? "variance_dominates_epe" : "variance_share_reported",
                   "var_fhat_over_epe", share, Cell{}, 0.5, i == 0 ? Cell{share > 0.5} : Cell{}});
    claims.AddRow({ProbeText(x), "policy_relative_change", "epe_tilde_over_epe",
                   r.epe_tilde_direct->value / r.epe_direct.value, Cell{}, 1.0, Cell{}});
  }
  ExperimentResult out;
  out.tables.emplace_back("decomposition", std::move(t));
  out.tables.emplace_back("claims", std::move(claims));
  return out;
}

}  // namespace internal

// Runs the experiment in memory; deterministic in (config minus workers/output).
inline ExperimentResult Execute(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::kDecompose: return internal::RunDecompose(c);
    case ExperimentKind::kOptimalShift: return internal::RunOptimalShift(c);
    case ExperimentKind::kShowcase: return internal::RunShowcaseExperiment(c);
    case ExperimentKind::kAbTest: return internal::RunAb(c);
    case ExperimentKind::kGeneralization: return internal::RunGeneralization(c);
    case ExperimentKind::kScenario1: return internal::RunScenario1(c);
    case ExperimentKind::kScenario2: return internal::RunScenario2(c);
    case ExperimentKind::kScenario3: return internal::RunScenario3(c);
  }
  throw std::logic_error("unhandled experiment kind");
}

// Hash of the canonical config without execution-only settings.
inline std::string ConfigHash(const ExperimentConfig& c) {
  return Sha256Hex(ToJson(c, false).dump());
}

inline json SeedRecord(std::uint64_t seed) {
  json derived = json::object();
  for (const char* label : {"pilot", "bias-oracle", "fresh-users", "oracle-quadrature",
                            "ab-bmod-on", "ab-bmod-off"}) {
    derived[label] = DeriveSeed(seed, label);
  }
  return {{"seed", seed}, {"derived", derived}};
}

struct RunStatus {
  int exit_code = kExitOk;
  json error;  // null on success
  std::vector<std::string> outputs;
  std::filesystem::path out_dir;
};

namespace internal {

inline RunStatus Fail(int code, std::string kind, std::string message, json extra = json::object()) {
  RunStatus s;
  s.exit_code = code;
  s.error = {{"status", "error"}, {"error", std::move(kind)}, {"message", std::move(message)},
             {"exit_code", code}};
  for (auto it = extra.begin(); it != extra.end(); ++it) s.error[it.key()] = it.value();
  return s;
}

inline RunStatus ValidationFailure(const std::vector<Violation>& v) {
  return Fail(kExitValidation, "validation",
              std::to_string(v.size()) + " config violation(s)",
              {{"violations", ViolationsToJson(v)}});
}

}  // namespace internal

struct ResolvedConfig {
  std::optional<ExperimentConfig> config;
  std::optional<RunStatus> failure;
};

// `source` is a config file path or a preset name.
inline ResolvedConfig ResolveConfig(const std::string& source) {
  ResolvedConfig out;
  std::error_code ec;
  const bool exists = std::filesystem::exists(source, ec);
  const bool looks_like_path = source.find('/') != std::string::npos ||
                               source.find('\\') != std::string::npos ||
                               (source.size() > 5 && source.ends_with(".json"));
  if (!exists && !looks_like_path) {
    if (auto kind = KindFromName(source)) {
      out.config = PresetConfig(*kind);
    } else {
      out.failure = internal::Fail(
          kExitValidation, "validation",
          "unknown preset \"" + source + "\"; available presets: " + PresetList(),
          {{"violations", ViolationsToJson({{"experiment", "unknown preset \"" + source +
                                                               "\"; available: " + PresetList()}})}});
    }
    return out;
  }
  ConfigLoad load = LoadConfigFile(source);
  if (load.io_error) {
    out.failure = internal::Fail(kExitIo, "io", *load.io_error);
  } else if (!load.violations.empty()) {
    out.failure = internal::ValidationFailure(load.violations);
  } else {
    out.config = std::move(load.config);
  }
  return out;
}

inline std::vector<Violation> ApplyOverrides(ExperimentConfig& c, const RunOverrides& o) {
  std::vector<Violation> v;
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.workers) {
    if (*o.workers < 1) v.push_back({"--workers", "must be >= 1"});
    c.workers = *o.workers;
  }
  if (o.format) {
    if (*o.format != "csv" && *o.format != "jsonl") v.push_back({"--format", "must be csv or jsonl"});
    c.format = *o.format;
  }
  return v;
}

// Writes result tables, users.jsonl, config.json and finally manifest.json.
inline std::vector<std::string> WriteOutputs(const ExperimentConfig& c, const ExperimentResult& r,
                                             double duration_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());

  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& [name, table] : r.tables) {
    if (c.format == "jsonl") {
      files.emplace_back(name + ".jsonl", table.ToJsonl());
    } else {
      files.emplace_back(name + ".csv", table.ToCsv());
    }
  }
  if (r.users_jsonl) files.emplace_back("users.jsonl", *r.users_jsonl);
  files.emplace_back("config.json", ToJson(c).dump(2) + "\n");

  json outputs = json::array();
  std::vector<std::string> names;
  for (const auto& [name, content] : files) {
    WriteFileAtomic(dir / name, content);
    outputs.push_back({{"file", name}, {"bytes", content.size()}, {"sha256", Sha256Hex(content)}});
    names.push_back(name);
  }
  json manifest = {{"artifact", "pmlab"},
                   {"version", PMLAB_VERSION},
                   {"experiment", std::string(KindName(c.kind))},
                   {"config_file", "config.json"},
                   {"config_hash", ConfigHash(c)},
                   {"config_hash_scope", "sha256 of the compact canonical config without "
                                         "\"workers\" and \"output\""},
                   {"seeds", SeedRecord(c.seed)},
                   {"workers", c.workers},
                   {"duration_seconds", duration_seconds},
                   {"outputs", outputs}};
  WriteFileAtomic(dir / "manifest.json", manifest.dump(2) + "\n");
  names.push_back("manifest.json");
  return names;
}

inline RunStatus RunExperiment(const std::string& source, const RunOverrides& overrides = {}) {
  try {
    ResolvedConfig rc = ResolveConfig(source);
    if (rc.failure) return *rc.failure;
    ExperimentConfig c = *rc.config;
    if (auto v = ApplyOverrides(c, overrides); !v.empty()) return internal::ValidationFailure(v);
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult result = Execute(c);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    RunStatus s;
    s.outputs = WriteOutputs(c, result, secs);
    s.out_dir = c.out_dir;
    return s;
  } catch (const IoError& e) {
    return internal::Fail(kExitIo, "io", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return internal::Fail(kExitIo, "io", e.what());
  } catch (const ConfigError& e) {
    return internal::Fail(kExitValidation, "validation", e.what());
  } catch (const InputError& e) {
    return internal::Fail(kExitValidation, "validation", e.what());
  } catch (const ReplicationError& e) {
    return internal::Fail(kExitInternal, "internal", e.what(),
                          {{"replication", e.replication()}});
  } catch (const std::exception& e) {
    return internal::Fail(kExitInternal, "internal", e.what());
  }
}

struct ValidationReport {
  std::vector<Violation> violations;
  std::optional<std::string> io_error;
};

inline ValidationReport ValidateConfigFile(const std::string& path) {
  ConfigLoad load = LoadConfigFile(path);
  return {std::move(load.violations), std::move(load.io_error)};
}

inline json CatalogJson() {
  json arr = json::array();
  for (const auto& e : kCatalog) {
    arr.push_back({{"name", std::string(e.name)},
                   {"description", std::string(e.description)},
                   {"regime", std::string(e.regime)},
                   {"scenario", IsScenario(e.kind)}});
  }
  return arr;
}

inline std::string CatalogText() {
  std::string s;
  for (const auto& e : kCatalog) {
    std::string name(e.name);
    name.resize(16, ' ');
    s += name + std::string(e.description) + "  [" + std::string(e.regime) + "]\n";
  }
  return s;
}

}  // namespace pmlab
