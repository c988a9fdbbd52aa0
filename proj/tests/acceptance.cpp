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

// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is 0 only if every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <unistd.h>

#include "pmlab/bmod.hpp"
#include "pmlab/config.hpp"
#include "pmlab/decomposition.hpp"
#include "pmlab/experiment.hpp"
#include "pmlab/output.hpp"
#include "pmlab/showcase.hpp"

namespace pmlab {
namespace {

const double kHalf = 0.5;
const std::span<const double> kAtHalf(&kHalf, 1);
// Probe where the linear fit to x^2 has Bias = +1/12 exactly.
const double kMirror = (1.0 + std::sqrt(2.0 / 3.0)) / 2.0;
const std::span<const double> kAtMirror(&kMirror, 1);
constexpr std::uint64_t kSeed = 20260101;

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string Num(double v) { return FormatNumber(v); }

std::string Fmt(const char* fmt, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c, d);
  return buf;
}

McOptions Opt(std::size_t reps, std::uint64_t seed) {
  McOptions o;
  o.reps = reps;
  o.seed = seed;
  return o;
}

// Shared by criteria 3 and 4: the shift curve at the +1/12 probe.
const ShiftCurve& MirrorCurve() {
  static const ShiftCurve curve = [] {
    const auto grid = MakeGrid(-0.2, 0.2, 0.01);
    return OptimalConstantShift(GroundTruth::Default(), ModelSpec::Linear(), 10000, kAtMirror,
                                grid, Opt(40000, kSeed + 3));
  }();
  return curve;
}

Outcome DecompositionIdentity() {
  const std::vector<InterventionPolicy> policies = {
      InterventionPolicy::Idle(), InterventionPolicy::ConstantShift(0.05),
      InterventionPolicy::ConstantShift(-0.05), InterventionPolicy::Shrinkage(0.5)};
  const auto reports = EpeModifiedMany(GroundTruth::Default(), ModelSpec::Linear(), policies,
                                       10000, kAtHalf, Opt(100000, kSeed + 1));
  Outcome o{true, ""};
  for (const auto& r : reports) {
    const double z_res = std::fabs(r.epe_tilde_residual->value) / r.epe_tilde_residual->se;
    const double z_cross = std::fabs(r.cross_term_tilde->value) / r.cross_term_tilde->se;
    o.pass = o.pass && z_res <= 4.0 && z_cross <= 4.0;
    o.details += r.policy + Fmt(" residual %.2fSE cross %.2fSE; ", z_res, z_cross);
  }
  return o;
}

Outcome IdleReduction() {
  const GroundTruth truth = GroundTruth::Default();
  const DecompositionReport idle = EpeModified(truth, ModelSpec::Linear(), InterventionPolicy::Idle(),
                                               10000, kAtHalf, Opt(100000, kSeed + 21));
  const DecompositionReport plain =
      EpeUnmodified(truth, ModelSpec::Linear(), 10000, kAtHalf, Opt(100000, kSeed + 22));
  const std::vector<std::tuple<std::string, Estimate, Estimate>> fields = {
      {"sigma2", *idle.sigma2_tilde, plain.sigma2},
      {"epe", *idle.epe_tilde_direct, plain.epe_direct},
      {"bias", idle.bias, plain.bias},
      {"var_fhat", idle.var_fhat, plain.var_fhat},
      {"cross_term", *idle.cross_term_tilde, plain.cross_term},
  };
  Outcome o{true, ""};
  for (const auto& [name, a, b] : fields) {
    const double z = std::fabs(a.value - b.value) / std::hypot(a.se, b.se);
    o.pass = o.pass && z <= 3.0;
    o.details += name + Fmt(" %.2fSE; ", z);
  }
  const bool cate_zero = idle.cate->value == 0.0 && idle.delta_direct->value == 0.0;
  o.pass = o.pass && cate_zero;
  o.details += cate_zero ? "cate = 0" : "cate != 0";
  return o;
}

Outcome OptimalityCondition() {
  const auto grid = MakeGrid(-0.2, 0.2, 0.01);
  const ShiftCurve half = OptimalConstantShift(GroundTruth::Default(), ModelSpec::Linear(), 10000,
                                               kAtHalf, grid, Opt(10000, kSeed + 2));
  const ShiftCurve& mirror = MirrorCurve();
  const bool ok_half = std::fabs(half.argmin - 1.0 / 12.0) <= 0.01 + 1e-12 &&
                       std::fabs(half.argmin + half.bias.value) <= 0.01 + 1e-12;
  const bool ok_mirror = std::fabs(mirror.argmin + 1.0 / 12.0) <= 0.01 + 1e-12 &&
                         std::fabs(mirror.bias.value - 1.0 / 12.0) <= 3.0 * mirror.bias.se + 1e-3;
  return {ok_half && ok_mirror,
          "x=0.5: bias " + Num(half.bias.value) + " argmin " + Num(half.argmin) + "; x=" +
              Num(kMirror) + ": bias " + Num(mirror.bias.value) + " argmin " + Num(mirror.argmin)};
}

Outcome ImprovementRegionMatches() {
  const ShiftCurve& curve = MirrorCurve();
  const double s2 = 0.05 * 0.05;
  const ImprovementRegion analytic = ImprovementRegionFor(1.0 / 12.0, s2, s2, curve.shifts);
  if (!analytic.interval) return {false, "analytic region is empty"};
  const auto [lo, hi] = *analytic.interval;
  const bool interval_ok = std::fabs(lo + 1.0 / 6.0) < 1e-12 && std::fabs(hi) < 1e-12;
  std::size_t compared = 0, mismatches = 0, improving = 0;
  for (std::size_t k = 0; k < curve.shifts.size(); ++k) {
    const double c = curve.shifts[k];
    if (std::fabs(c - lo) < 1e-9 || std::fabs(c - hi) < 1e-9) continue;
    const bool inside = c > lo && c < hi;
    const bool empirical = curve.delta[k].value < 0.0;
    ++compared;
    improving += empirical;
    mismatches += inside != empirical;
  }
  return {interval_ok && mismatches == 0 && compared == 40,
          "interval (" + Num(lo) + ", " + Num(hi) + "), " + std::to_string(compared) +
              " grid points compared, " + std::to_string(improving) + " improving, " +
              std::to_string(mismatches) + " mismatches"};
}

Outcome DeltaFormula() {
  const std::vector<InterventionPolicy> policies = {InterventionPolicy::ConstantShift(0.1),
                                                    InterventionPolicy::Shrinkage(0.5)};
  const auto reports = EpeModifiedMany(GroundTruth::Default(), ModelSpec::Linear(), policies,
                                       10000, kAtHalf, Opt(100000, kSeed + 5));
  Outcome o{true, ""};
  for (const auto& r : reports) {
    const double z = std::fabs(r.delta_gap->value) / r.delta_gap->se;
    o.pass = o.pass && z <= 3.0;
    o.details += r.policy + " measured " + Num(r.delta_direct->value) + " formula " +
                 Num(r.delta_formula->value) + Fmt(" gap %.2fSE; ", z);
  }
  return o;
}

Outcome ScenarioSuite() {
  Outcome o{true, ""};
  for (ExperimentKind k : {ExperimentKind::kScenario1, ExperimentKind::kScenario2,
                           ExperimentKind::kScenario3}) {
    const ExperimentResult r = Execute(PresetConfig(k));
    std::size_t checked = 0, failed = 0;
    for (const auto& [name, table] : r.tables) {
      if (name != "claims") continue;
      const auto& cols = table.columns();
      const auto pass_col = std::find(cols.begin(), cols.end(), "pass") - cols.begin();
      const auto claim_col = std::find(cols.begin(), cols.end(), "claim") - cols.begin();
      for (std::size_t i = 0; i < table.size(); ++i) {
        const Cell& cell = table.row(i)[static_cast<std::size_t>(pass_col)];
        if (!std::holds_alternative<bool>(cell)) continue;
        ++checked;
        if (!std::get<bool>(cell)) {
          ++failed;
          o.details += "failed " + std::get<std::string>(table.row(i)[static_cast<std::size_t>(claim_col)]) + "; ";
        }
      }
    }
    o.pass = o.pass && checked > 0 && failed == 0;
    o.details += std::string(KindName(k)) + " " + std::to_string(checked - failed) + "/" +
                 std::to_string(checked) + " claims; ";
  }
  return o;
}

Outcome SequentialAgent() {
  const GroundTruth truth = GroundTruth::Default();
  const ModifiedWorld world(truth);
  const AgentConfig cfg = AgentConfig::Default();
  const double yhat = 0.35;
  const double fx = truth.true_fn(kAtHalf);
  constexpr std::uint64_t kRuns = 200;
  const std::uint64_t seed = kSeed + 7;
  std::vector<double> paired(kRuns);
  std::map<double, int> finals;
  for (std::uint64_t r = 0; r < kRuns; ++r) {
    const Trajectory tr = RunSequentialAgent(cfg, world, yhat, kAtHalf, seed, r);
    // Idle sees the same unit noise the agent's final outcome used.
    RandomStream zs({seed, Purpose::kOutcome, 0, r, 0});
    const double idle = fx + truth.noise_sd * UnitNoise(truth.noise_law, zs);
    paired[r] = std::pow(yhat - tr.outcome, 2) - std::pow(yhat - idle, 2);
    ++finals[tr.final_intervention];
  }
  const Estimate d = MeanEstimate(paired);
  const auto mode = std::max_element(finals.begin(), finals.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  const double share = finals[0.1] / static_cast<double>(kRuns);
  const bool better = d.value + 1.645 * d.se < 0.0;
  return {better && mode->first == 0.1 && share >= 0.9,
          "agent minus idle squared error " + Num(d.value) + " (upper 95% bound " +
              Num(d.value + 1.645 * d.se) + "), modal final action " + Num(mode->first) +
              " in " + Num(100.0 * share) + "% of runs"};
}

ShowcaseConfig Showcase(InterventionPolicy policy, std::uint64_t seed) {
  ShowcaseConfig c;
  c.policy = std::move(policy);
  c.seed = seed;
  return c;
}

Outcome AbNonDetectability() {
  ShowcaseConfig c = Showcase(InterventionPolicy::ConstantShift(0.1), kSeed + 8);
  c.n_showcase = 100;
  c.ab_replicates = 2000;
  const AbTestReport r = RunAbTest(c);
  return {std::fabs(r.rejection_rate_on - 0.05) <= 0.02 && r.ks_distance < r.ks_critical,
          "type-I error on " + Num(r.rejection_rate_on) + " off " + Num(r.rejection_rate_off) +
              ", KS " + Num(r.ks_distance) + " vs critical " + Num(r.ks_critical)};
}

// Standard error of log(mean of squared errors).
double LogMseSe(const std::vector<UserRecord>& users) {
  std::vector<double> sq;
  for (const auto& u : users) sq.push_back(u.error * u.error);
  const Estimate m = MeanEstimate(sq);
  return m.se / m.value;
}

Outcome GeneralizationGap() {
  const GeneralizationReport g =
      CompareGeneralization(Showcase(InterventionPolicy::Shrinkage(0.9), kSeed + 9));
  if (!g.predicted_ratio) return {false, "no two-oracle prediction"};
  const double se = std::hypot(LogMseSe(g.fresh), LogMseSe(g.showcase.users));
  const double z = std::fabs(std::log(g.ratio / *g.predicted_ratio)) / se;
  return {g.ratio > 5.0 && z <= 3.0,
          "fresh/showcase MSE ratio " + Num(g.ratio) + ", predicted " + Num(*g.predicted_ratio) +
              Fmt(", log gap %.2fSE", z)};
}

Outcome Determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("pmlab-acceptance-" + std::to_string(::getpid()));
  Outcome o{true, ""};
  for (const auto& e : kCatalog) {
    std::vector<fs::path> dirs;
    for (int workers : {1, 3}) {
      RunOverrides ov;
      ov.workers = workers;
      ov.out_dir = (root / (std::string(e.name) + "-w" + std::to_string(workers))).string();
      const RunStatus s = RunExperiment(std::string(e.name), ov);
      if (s.exit_code != kExitOk) {
        o.pass = false;
        o.details += std::string(e.name) + " exit " + std::to_string(s.exit_code) + "; ";
      }
      dirs.emplace_back(ov.out_dir.value());
    }
    std::size_t files = 0, differing = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const std::string name = entry.path().filename().string();
      // config.json and manifest.json record the worker count and wall time.
      if (name == "config.json" || name == "manifest.json") continue;
      ++files;
      if (!fs::exists(dirs[1] / name) || ReadFile(entry.path()) != ReadFile(dirs[1] / name)) ++differing;
    }
    const auto hash = [](const fs::path& d) {
      return nlohmann::json::parse(ReadFile(d / "manifest.json")).at("config_hash").get<std::string>();
    };
    const bool same_hash = hash(dirs[0]) == hash(dirs[1]);
    o.pass = o.pass && files > 0 && differing == 0 && same_hash;
    o.details += std::string(e.name) + " " + std::to_string(files - differing) + "/" +
                 std::to_string(files) + (same_hash ? "" : " hash differs") + "; ";
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  return o;
}

}  // namespace
}  // namespace pmlab

int main() {
  using namespace pmlab;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"decomposition identity", DecompositionIdentity},
      {"idle reduces to unmodified", IdleReduction},
      {"optimal shift equals minus bias", OptimalityCondition},
      {"improvement region", ImprovementRegionMatches},
      {"delta formula", DeltaFormula},
      {"scenario suite", ScenarioSuite},
      {"sequential agent", SequentialAgent},
      {"a/b non-detectability", AbNonDetectability},
      {"generalization gap", GeneralizationGap},
      {"determinism across workers", Determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("[%s] %zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.details.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
