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

// Experiment configuration: JSON schema, presets, full (all-violations)
// validation and canonical serialization.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmlab/bmod.hpp"
#include "pmlab/errors.hpp"
#include "pmlab/predictor.hpp"
#include "pmlab/worldgen.hpp"

namespace pmlab {

enum class ExperimentKind {
  kDecompose,
  kOptimalShift,
  kShowcase,
  kAbTest,
  kGeneralization,
  kScenario1,
  kScenario2,
  kScenario3,
};

struct CatalogEntry {
  ExperimentKind kind;
  std::string_view name;
  std::string_view description;
  std::string_view regime;
};

inline constexpr CatalogEntry kCatalog[] = {
    {ExperimentKind::kDecompose, "decompose",
     "EPE and modified-EPE decomposition at each probe x", "base experiment"},
    {ExperimentKind::kOptimalShift, "optimal-shift",
     "modified EPE over a grid of constant shifts; argmin and improvement region",
     "base experiment"},
    {ExperimentKind::kShowcase, "showcase",
     "train, fix predictions, modify a showcase sample, report per-user errors and MSE",
     "base experiment"},
    {ExperimentKind::kAbTest, "ab-test",
     "randomized A/B test with modification applied to all users; t distributions on vs off",
     "base experiment"},
    {ExperimentKind::kGeneralization, "generalization",
     "showcase MSE under modification vs MSE on fresh unmodified users", "base experiment"},
    {ExperimentKind::kScenario1, "scenario1",
     "low-bias model (polynomial(2)) trained on a very large sample (n_train = 1e5)",
     "Scenario 1: low bias, large sample"},
    {ExperimentKind::kScenario2, "scenario2",
     "high-bias model (linear on a quadratic world) trained on a very large sample (n_train = 1e5)",
     "Scenario 2: high bias, large sample"},
    {ExperimentKind::kScenario3, "scenario3",
     "high-variance model (linear, n_train = 30) in a low-noise world",
     "Scenario 3: high variance"},
};

inline std::string_view KindName(ExperimentKind k) {
  for (const auto& e : kCatalog) {
    if (e.kind == k) return e.name;
  }
  return "?";
}

inline std::optional<ExperimentKind> KindFromName(std::string_view name) {
  for (const auto& e : kCatalog) {
    if (e.name == name) return e.kind;
  }
  return std::nullopt;
}

inline std::string PresetList() {
  std::string s;
  for (const auto& e : kCatalog) {
    if (!s.empty()) s += ", ";
    s += e.name;
  }
  return s;
}

inline bool IsScenario(ExperimentKind k) {
  return k == ExperimentKind::kScenario1 || k == ExperimentKind::kScenario2 ||
         k == ExperimentKind::kScenario3;
}

struct ShiftGridSpec {
  double lower = -0.2;
  double upper = 0.2;
  double step = 0.01;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kDecompose;
  std::uint64_t seed = 20260101;
  int workers = 1;
  GroundTruth world = GroundTruth::Default();
  ModelSpec model = ModelSpec::Linear();
  InterventionPolicy policy = InterventionPolicy::Idle();
  std::size_t n_train = 10000;
  std::size_t reps = 2000;
  std::vector<std::vector<double>> probes = {{0.5}};
  ShiftGridSpec shift_grid;
  std::size_t n_showcase = 2000;
  int horizon_steps = 50;
  std::size_t n_fresh = 0;
  double customer_effect = 0.0;
  std::size_t ab_replicates = 2000;
  std::size_t bias_models = 20;
  std::string out_dir = "pmlab-out";
  std::string format = "csv";
};

// Zero-bias point of the linear fit to x^2 on U[0,1]: root of x^2 - x + 1/6.
inline constexpr double kZeroBiasProbe = 0.21132486540518713;

inline ExperimentConfig PresetConfig(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::kDecompose:
      c.policy = InterventionPolicy::ConstantShift(0.05);
      c.reps = 10000;
      c.probes = {{kZeroBiasProbe}, {0.35}, {0.5}, {0.95}};
      break;
    case ExperimentKind::kOptimalShift:
      c.reps = 10000;
      c.probes = {{0.5}};
      break;
    case ExperimentKind::kShowcase:
      c.policy = InterventionPolicy::SequentialAgent();
      break;
    case ExperimentKind::kAbTest:
      c.policy = InterventionPolicy::ConstantShift(0.1);
      c.n_showcase = 100;
      break;
    case ExperimentKind::kGeneralization:
      c.policy = InterventionPolicy::Shrinkage(0.9);
      break;
    case ExperimentKind::kScenario1:
      c.model = ModelSpec::Polynomial(2);
      c.n_train = 100000;
      c.reps = 4000;  // resolves the delta = 1e-4 of the smallest shift at ~6 SE
      c.policy = InterventionPolicy::Shrinkage(0.5);
      c.probes = {{kZeroBiasProbe}};
      break;
    case ExperimentKind::kScenario2:
      c.model = ModelSpec::Linear();
      c.n_train = 100000;
      c.reps = 1000;
      c.policy = InterventionPolicy::OracleCounterBias();
      c.probes = {{kZeroBiasProbe}, {0.35}, {0.95}};
      break;
    case ExperimentKind::kScenario3:
      c.model = ModelSpec::Linear();
      c.n_train = 30;
      c.reps = 4000;
      c.world.noise_sd = 0.01;
      c.policy = InterventionPolicy::OracleCounterBias();
      c.probes = {{kZeroBiasProbe}, {0.5}};
      break;
  }
  return c;
}

struct Violation {
  std::string field;
  std::string message;
};

using json = nlohmann::json;

namespace internal {

class ConfigReader {
 public:
  std::vector<Violation> violations;

  void Add(std::string field, std::string message) {
    violations.push_back({std::move(field), std::move(message)});
  }

  // Reports keys of `obj` outside `allowed`. Returns false if obj is not an object.
  bool Object(const json& obj, const std::string& path,
              std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) {
      Add(path.empty() ? "<root>" : path, "must be a JSON object");
      return false;
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
        Add(Join(path, it.key()), "unknown key");
      }
    }
    return true;
  }

  static std::string Join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

  bool Double(const json& obj, std::string_view key, const std::string& path, double& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number()) {
      Add(Join(path, key), "must be a number");
      return false;
    }
    out = it->get<double>();
    if (!std::isfinite(out)) Add(Join(path, key), "must be finite");
    return true;
  }

  template <typename Int>
  bool Integer(const json& obj, std::string_view key, const std::string& path, Int& out,
               long double lo, long double hi) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number_integer()) {
      Add(Join(path, key), "must be an integer");
      return false;
    }
    const long double v = it->is_number_unsigned()
                              ? static_cast<long double>(it->get<std::uint64_t>())
                              : static_cast<long double>(it->get<std::int64_t>());
    if (v < lo || v > hi) {
      std::ostringstream msg;
      msg << "= " << it->dump() << " is outside [" << static_cast<double>(lo) << ", "
          << static_cast<double>(hi) << "]";
      Add(Join(path, key), msg.str());
      return false;
    }
    out = it->is_number_unsigned() ? static_cast<Int>(it->get<std::uint64_t>())
                                   : static_cast<Int>(it->get<std::int64_t>());
    return true;
  }

  bool String(const json& obj, std::string_view key, const std::string& path, std::string& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_string()) {
      Add(Join(path, key), "must be a string");
      return false;
    }
    out = it->get<std::string>();
    return true;
  }

  bool Bool(const json& obj, std::string_view key, const std::string& path, bool& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_boolean()) {
      Add(Join(path, key), "must be true or false");
      return false;
    }
    out = it->get<bool>();
    return true;
  }

  bool Vector(const json& obj, std::string_view key, const std::string& path,
              std::vector<double>& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    return VectorValue(*it, Join(path, key), out);
  }

  bool VectorValue(const json& v, const std::string& field, std::vector<double>& out) {
    if (!v.is_array()) {
      Add(field, "must be an array of numbers");
      return false;
    }
    std::vector<double> tmp;
    for (const auto& e : v) {
      if (!e.is_number()) {
        Add(field, "must be an array of numbers");
        return false;
      }
      tmp.push_back(e.get<double>());
    }
    out = std::move(tmp);
    return true;
  }

  void Range(const std::string& field, double v, double lo, double hi, bool lo_open = false) {
    const bool ok = (lo_open ? v > lo : v >= lo) && v <= hi;
    if (!ok) {
      std::ostringstream msg;
      msg << "= " << v << " is outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
      Add(field, msg.str());
    }
  }
};

inline void ReadWorld(ConfigReader& rd, const json& w, GroundTruth& truth) {
  const std::string path = "world";
  if (!rd.Object(w, path, {"true_fn", "noise_sd", "noise_law", "feature_law", "dose_response",
                           "sensitivity"})) {
    return;
  }
  if (auto it = w.find("true_fn"); it != w.end()) {
    const std::string p = "world.true_fn";
    if (rd.Object(*it, p, {"coefficients", "dims", "terms"})) {
      std::vector<double> coef;
      if (rd.Vector(*it, "coefficients", p, coef)) {
        if (it->contains("terms")) rd.Add(p, "give either coefficients or terms, not both");
        truth.true_fn = Polynomial::Univariate(coef);
      } else if (auto t = it->find("terms"); t != it->end()) {
        std::size_t dims = 1;
        rd.Integer(*it, "dims", p, dims, 1, 64);
        std::vector<Monomial> terms;
        bool ok = t->is_array();
        if (ok) {
          for (const auto& term : *t) {
            Monomial m;
            if (!rd.Object(term, p + ".terms[]", {"coefficient", "powers"})) {
              ok = false;
              break;
            }
            rd.Double(term, "coefficient", p + ".terms[]", m.coefficient);
            std::vector<double> pw;
            if (rd.Vector(term, "powers", p + ".terms[]", pw)) {
              for (double e : pw) m.powers.push_back(static_cast<int>(e));
            }
            terms.push_back(std::move(m));
          }
        } else {
          rd.Add(p + ".terms", "must be an array");
        }
        if (ok) {
          try {
            truth.true_fn = Polynomial(dims, std::move(terms));
          } catch (const ConfigError& e) {
            rd.Add(p, e.what());
          }
        }
      } else {
        rd.Add(p, "needs coefficients or terms");
      }
    }
  }
  if (rd.Double(w, "noise_sd", path, truth.noise_sd) && !(truth.noise_sd >= 0.0)) {
    rd.Add("world.noise_sd", "= " + std::to_string(truth.noise_sd) + " must be >= 0");
  }
  std::string law;
  if (rd.String(w, "noise_law", path, law)) {
    if (law == "gaussian") {
      truth.noise_law = NoiseLaw::kGaussian;
    } else if (law == "uniform") {
      truth.noise_law = NoiseLaw::kUniform;
    } else {
      rd.Add("world.noise_law", "must be \"gaussian\" or \"uniform\"");
    }
  }
  if (auto it = w.find("feature_law"); it != w.end()) {
    const std::string p = "world.feature_law";
    if (rd.Object(*it, p, {"kind", "lower", "upper", "mean", "covariance"})) {
      std::string kind = "uniform";
      rd.String(*it, "kind", p, kind);
      try {
        if (kind == "uniform") {
          std::vector<double> lo{0.0}, hi{1.0};
          rd.Vector(*it, "lower", p, lo);
          rd.Vector(*it, "upper", p, hi);
          truth.feature_law = FeatureLaw::Uniform(lo, hi);
        } else if (kind == "gaussian") {
          std::vector<double> mean{0.0};
          rd.Vector(*it, "mean", p, mean);
          std::vector<std::vector<double>> cov;
          if (auto c = it->find("covariance"); c != it->end() && c->is_array()) {
            for (const auto& row : *c) {
              std::vector<double> r;
              rd.VectorValue(row, p + ".covariance", r);
              cov.push_back(r);
            }
          } else {
            rd.Add(p + ".covariance", "required for a gaussian feature law");
          }
          truth.feature_law = FeatureLaw::Gaussian(mean, cov);
        } else {
          rd.Add(p + ".kind", "must be \"uniform\" or \"gaussian\"");
        }
      } catch (const ConfigError& e) {
        rd.Add(p, e.what());
      }
    }
  }
  if (auto it = w.find("dose_response"); it != w.end()) {
    const std::string p = "world.dose_response";
    if (rd.Object(*it, p, {"kind", "saturation", "noise_slope"})) {
      std::string kind;
      if (rd.String(*it, "kind", p, kind)) {
        if (kind == "linear") {
          truth.dose_response.kind = DoseResponse::Kind::kLinear;
        } else if (kind == "saturating") {
          truth.dose_response.kind = DoseResponse::Kind::kSaturating;
        } else {
          rd.Add(p + ".kind", "must be \"linear\" or \"saturating\"");
        }
      }
      if (rd.Double(*it, "saturation", p, truth.dose_response.saturation) &&
          !(truth.dose_response.saturation > 0.0)) {
        rd.Add(p + ".saturation", "must be > 0");
      }
      rd.Double(*it, "noise_slope", p, truth.dose_response.noise_slope);
    }
  }
  if (auto it = w.find("sensitivity"); it != w.end()) {
    const std::string p = "world.sensitivity";
    if (rd.Object(*it, p, {"kind", "value", "lower", "upper", "mean", "sd"})) {
      std::string kind = "point";
      rd.String(*it, "kind", p, kind);
      try {
        if (kind == "point") {
          double v = 1.0;
          rd.Double(*it, "value", p, v);
          truth.sensitivity = SensitivityLaw::Point(v);
        } else if (kind == "uniform") {
          double lo = 0.0, hi = 1.0;
          rd.Double(*it, "lower", p, lo);
          rd.Double(*it, "upper", p, hi);
          truth.sensitivity = SensitivityLaw::Uniform(lo, hi);
        } else if (kind == "gaussian") {
          double m = 1.0, sd = 0.0;
          rd.Double(*it, "mean", p, m);
          rd.Double(*it, "sd", p, sd);
          truth.sensitivity = SensitivityLaw::Gaussian(m, sd);
        } else {
          rd.Add(p + ".kind", "must be \"point\", \"uniform\" or \"gaussian\"");
        }
      } catch (const ConfigError& e) {
        rd.Add(p, e.what());
      }
    }
  }
  if (truth.true_fn.dims() != truth.feature_law.dims()) {
    rd.Add("world.true_fn", "dimension " + std::to_string(truth.true_fn.dims()) +
                                " does not match world.feature_law dimension " +
                                std::to_string(truth.feature_law.dims()));
  }
}

inline void ReadModel(ConfigReader& rd, const json& m, ModelSpec& spec) {
  const std::string p = "model";
  if (!rd.Object(m, p, {"family", "degree", "k", "ridge"})) return;
  std::string family;
  if (rd.String(m, "family", p, family)) {
    if (family == "linear") {
      spec.family = ModelSpec::Family::kLinear;
    } else if (family == "polynomial") {
      spec.family = ModelSpec::Family::kPolynomial;
    } else if (family == "k_nearest_mean") {
      spec.family = ModelSpec::Family::kKNearestMean;
    } else {
      rd.Add("model.family", "must be \"linear\", \"polynomial\" or \"k_nearest_mean\"");
    }
  }
  rd.Integer(m, "degree", p, spec.degree, 1, 12);
  rd.Integer(m, "k", p, spec.k, 1, 1e12);
  if (rd.Double(m, "ridge", p, spec.ridge) && !(spec.ridge >= 0.0)) {
    rd.Add("model.ridge", "= " + std::to_string(spec.ridge) + " must be >= 0");
  }
}

inline void ReadPolicy(ConfigReader& rd, const json& o, InterventionPolicy& policy) {
  const std::string p = "policy";
  if (!rd.Object(o, p, {"kind", "delta", "lambda", "mode", "grid", "noise_sd", "agent"})) return;
  std::string kind;
  if (rd.String(o, "kind", p, kind)) {
    using K = InterventionPolicy::Kind;
    if (kind == "idle") {
      policy.kind = K::kIdle;
    } else if (kind == "constant_shift") {
      policy.kind = K::kConstantShift;
    } else if (kind == "oracle_counter_bias") {
      policy.kind = K::kOracleCounterBias;
    } else if (kind == "shrinkage") {
      policy.kind = K::kShrinkage;
    } else if (kind == "sequential_agent") {
      policy.kind = K::kSequentialAgent;
      if (policy.agent.action_grid.empty()) policy.agent = AgentConfig::Default();
    } else {
      rd.Add("policy.kind",
             "must be one of idle, constant_shift, oracle_counter_bias, shrinkage, "
             "sequential_agent");
    }
  }
  rd.Double(o, "delta", p, policy.delta);
  if (rd.Double(o, "lambda", p, policy.lambda)) rd.Range("policy.lambda", policy.lambda, 0.0, 1.0);
  std::string mode;
  if (rd.String(o, "mode", p, mode)) {
    if (mode == "continuous") {
      policy.continuous = true;
    } else if (mode == "grid") {
      policy.continuous = false;
    } else {
      rd.Add("policy.mode", "must be \"continuous\" or \"grid\"");
    }
  }
  rd.Vector(o, "grid", p, policy.grid);
  if (rd.Double(o, "noise_sd", p, policy.policy_noise_sd) && !(policy.policy_noise_sd >= 0.0)) {
    rd.Add("policy.noise_sd", "= " + std::to_string(policy.policy_noise_sd) + " must be >= 0");
  }
  if (auto it = o.find("agent"); it != o.end()) {
    const std::string ap = "policy.agent";
    if (rd.Object(*it, ap, {"action_grid", "horizon_steps", "explore_steps", "step_noise_sd"})) {
      if (policy.agent.action_grid.empty()) policy.agent = AgentConfig::Default();
      rd.Vector(*it, "action_grid", ap, policy.agent.action_grid);
      rd.Integer(*it, "horizon_steps", ap, policy.agent.horizon_steps, 1, 1e7);
      rd.Integer(*it, "explore_steps", ap, policy.agent.explore_steps, 2, 1e7);
      if (rd.Double(*it, "step_noise_sd", ap, policy.agent.step_noise_sd) &&
          !(policy.agent.step_noise_sd >= 0.0)) {
        rd.Add("policy.agent.step_noise_sd", "must be >= 0");
      }
    }
  }
  if (policy.kind == InterventionPolicy::Kind::kSequentialAgent && policy.agent.action_grid.empty()) {
    policy.agent = AgentConfig::Default();
  }
  // Cross-field rules not covered above.
  try {
    InterventionPolicy probe = policy;
    probe.lambda = std::clamp(probe.lambda, 0.0, 1.0);
    probe.policy_noise_sd = std::max(0.0, probe.policy_noise_sd);
    probe.Validate();
  } catch (const ConfigError& e) {
    rd.Add("policy", e.what());
  }
}

}  // namespace internal

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<Violation> violations;
};

// Starts from the preset named by "experiment" and overlays every given key.
inline ParseResult ParseConfig(const json& doc) {
  internal::ConfigReader rd;
  ParseResult out;
  if (!rd.Object(doc, "", {"experiment", "seed", "workers", "world", "model", "policy",
                           "n_train", "reps", "probes", "shift_grid", "showcase", "output"})) {
    out.violations = rd.violations;
    return out;
  }
  std::string name;
  if (!rd.String(doc, "experiment", "", name)) {
    if (!doc.contains("experiment")) rd.Add("experiment", "required; one of " + PresetList());
    out.violations = rd.violations;
    return out;
  }
  const auto kind = KindFromName(name);
  if (!kind) {
    rd.Add("experiment", "unknown preset \"" + name + "\"; available: " + PresetList());
    out.violations = rd.violations;
    return out;
  }
  ExperimentConfig c = PresetConfig(*kind);

  rd.Integer(doc, "seed", "", c.seed, 0, static_cast<long double>(std::numeric_limits<std::uint64_t>::max()));
  rd.Integer(doc, "workers", "", c.workers, 1, 1024);
  if (auto it = doc.find("world"); it != doc.end()) internal::ReadWorld(rd, *it, c.world);
  if (auto it = doc.find("model"); it != doc.end()) internal::ReadModel(rd, *it, c.model);
  if (auto it = doc.find("policy"); it != doc.end()) internal::ReadPolicy(rd, *it, c.policy);
  rd.Integer(doc, "n_train", "", c.n_train, 1, 1e9);
  const bool decomposition_kind = c.kind == ExperimentKind::kDecompose ||
                                  c.kind == ExperimentKind::kOptimalShift || IsScenario(c.kind);
  rd.Integer(doc, "reps", "", c.reps, decomposition_kind ? 100 : 2, 1e9);
  if (auto it = doc.find("probes"); it != doc.end()) {
    if (!it->is_array() || it->empty()) {
      rd.Add("probes", "must be a non-empty array of numbers or of arrays");
    } else {
      std::vector<std::vector<double>> probes;
      for (const auto& e : *it) {
        if (e.is_number()) {
          probes.push_back({e.get<double>()});
        } else {
          std::vector<double> v;
          if (rd.VectorValue(e, "probes", v)) probes.push_back(v);
        }
      }
      c.probes = probes;
    }
  }
  for (const auto& pr : c.probes) {
    if (pr.size() != c.world.dims()) {
      rd.Add("probes", "probe of dimension " + std::to_string(pr.size()) +
                           " does not match the world's feature dimension " +
                           std::to_string(c.world.dims()));
      break;
    }
  }
  if (auto it = doc.find("shift_grid"); it != doc.end()) {
    if (rd.Object(*it, "shift_grid", {"lower", "upper", "step"})) {
      rd.Double(*it, "lower", "shift_grid", c.shift_grid.lower);
      rd.Double(*it, "upper", "shift_grid", c.shift_grid.upper);
      if (rd.Double(*it, "step", "shift_grid", c.shift_grid.step) && !(c.shift_grid.step > 0.0)) {
        rd.Add("shift_grid.step", "must be > 0");
      }
    }
  }
  if (!(c.shift_grid.upper >= c.shift_grid.lower)) rd.Add("shift_grid", "upper must be >= lower");
  if (auto it = doc.find("showcase"); it != doc.end()) {
    const std::string p = "showcase";
    if (rd.Object(*it, p, {"n_showcase", "horizon_steps", "n_fresh", "customer_effect",
                           "replicates", "bias_models"})) {
      rd.Integer(*it, "n_showcase", p, c.n_showcase, c.kind == ExperimentKind::kAbTest ? 4 : 2, 1e9);
      rd.Integer(*it, "horizon_steps", p, c.horizon_steps, 1, 1e7);
      rd.Integer(*it, "n_fresh", p, c.n_fresh, 0, 1e9);
      rd.Double(*it, "customer_effect", p, c.customer_effect);
      rd.Integer(*it, "replicates", p, c.ab_replicates, 2, 1e9);
      rd.Integer(*it, "bias_models", p, c.bias_models, 1, 1e6);
    }
  }
  if (auto it = doc.find("output"); it != doc.end()) {
    if (rd.Object(*it, "output", {"dir", "format"})) {
      rd.String(*it, "dir", "output", c.out_dir);
      if (rd.String(*it, "format", "output", c.format) && c.format != "csv" && c.format != "jsonl") {
        rd.Add("output.format", "must be \"csv\" or \"jsonl\"");
      }
    }
  }
  if (c.model.family == ModelSpec::Family::kKNearestMean && c.model.k > c.n_train) {
    rd.Add("model.k", "= " + std::to_string(c.model.k) + " exceeds n_train = " +
                          std::to_string(c.n_train));
  }
  out.violations = rd.violations;
  if (out.violations.empty()) out.config = std::move(c);
  return out;
}

namespace internal {

inline json WorldToJson(const GroundTruth& t) {
  json w;
  if (const auto& coef = t.true_fn.univariate_coefficients()) {
    w["true_fn"] = {{"coefficients", *coef}};
  } else {
    json terms = json::array();
    for (const auto& m : t.true_fn.terms()) {
      terms.push_back({{"coefficient", m.coefficient}, {"powers", m.powers}});
    }
    w["true_fn"] = {{"dims", t.true_fn.dims()}, {"terms", terms}};
  }
  w["noise_sd"] = t.noise_sd;
  w["noise_law"] = t.noise_law == NoiseLaw::kGaussian ? "gaussian" : "uniform";
  if (t.feature_law.kind() == FeatureLaw::Kind::kUniform) {
    w["feature_law"] = {{"kind", "uniform"},
                        {"lower", t.feature_law.lower()},
                        {"upper", t.feature_law.upper()}};
  } else {
    w["feature_law"] = {{"kind", "gaussian"},
                        {"mean", t.feature_law.mean()},
                        {"covariance", t.feature_law.covariance()}};
  }
  w["dose_response"] = {
      {"kind", t.dose_response.kind == DoseResponse::Kind::kLinear ? "linear" : "saturating"},
      {"saturation", t.dose_response.saturation},
      {"noise_slope", t.dose_response.noise_slope}};
  switch (t.sensitivity.kind()) {
    case SensitivityLaw::Kind::kPoint:
      w["sensitivity"] = {{"kind", "point"}, {"value", t.sensitivity.first()}};
      break;
    case SensitivityLaw::Kind::kUniform:
      w["sensitivity"] = {{"kind", "uniform"},
                          {"lower", t.sensitivity.first()},
                          {"upper", t.sensitivity.second()}};
      break;
    case SensitivityLaw::Kind::kGaussian:
      w["sensitivity"] = {{"kind", "gaussian"},
                          {"mean", t.sensitivity.first()},
                          {"sd", t.sensitivity.second()}};
      break;
  }
  return w;
}

inline json PolicyToJson(const InterventionPolicy& p) {
  static constexpr const char* kNames[] = {"idle", "constant_shift", "oracle_counter_bias",
                                           "shrinkage", "sequential_agent"};
  json o = {{"kind", kNames[static_cast<int>(p.kind)]},
            {"delta", p.delta},
            {"lambda", p.lambda},
            {"mode", p.continuous ? "continuous" : "grid"},
            {"grid", p.grid},
            {"noise_sd", p.policy_noise_sd}};
  if (!p.agent.action_grid.empty()) {
    o["agent"] = {{"action_grid", p.agent.action_grid},
                  {"horizon_steps", p.agent.horizon_steps},
                  {"explore_steps", p.agent.explore_steps},
                  {"step_noise_sd", p.agent.step_noise_sd}};
  }
  return o;
}

}  // namespace internal

// Canonical full form; ParseConfig(ToJson(c)) reproduces c.
inline json ToJson(const ExperimentConfig& c, bool include_execution = true) {
  static constexpr const char* kFamilies[] = {"linear", "polynomial", "k_nearest_mean"};
  json j;
  j["experiment"] = std::string(KindName(c.kind));
  j["seed"] = c.seed;
  j["world"] = internal::WorldToJson(c.world);
  j["model"] = {{"family", kFamilies[static_cast<int>(c.model.family)]},
                {"degree", c.model.degree},
                {"k", c.model.k},
                {"ridge", c.model.ridge}};
  j["policy"] = internal::PolicyToJson(c.policy);
  j["n_train"] = c.n_train;
  j["reps"] = c.reps;
  j["probes"] = c.probes;
  j["shift_grid"] = {{"lower", c.shift_grid.lower},
                     {"upper", c.shift_grid.upper},
                     {"step", c.shift_grid.step}};
  j["showcase"] = {{"n_showcase", c.n_showcase},
                   {"horizon_steps", c.horizon_steps},
                   {"n_fresh", c.n_fresh},
                   {"customer_effect", c.customer_effect},
                   {"replicates", c.ab_replicates},
                   {"bias_models", c.bias_models}};
  if (include_execution) {
    j["workers"] = c.workers;
    j["output"] = {{"dir", c.out_dir}, {"format", c.format}};
  }
  return j;
}

struct ConfigLoad {
  std::optional<ExperimentConfig> config;
  std::vector<Violation> violations;
  std::optional<std::string> io_error;
};

inline ConfigLoad LoadConfigFile(const std::string& path) {
  ConfigLoad out;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    out.io_error = "cannot read config file: " + path;
    return out;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    out.violations.push_back({"<file>", std::string("not valid JSON: ") + e.what()});
    return out;
  }
  ParseResult pr = ParseConfig(doc);
  out.config = std::move(pr.config);
  out.violations = std::move(pr.violations);
  return out;
}

inline json ViolationsToJson(const std::vector<Violation>& vs) {
  json arr = json::array();
  for (const auto& v : vs) arr.push_back({{"field", v.field}, {"message", v.message}});
  return arr;
}

}  // namespace pmlab
