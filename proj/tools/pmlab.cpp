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

// pmlab command-line entry point.
//
//   pmlab run <config|preset> [--seed N] [--out-dir PATH] [--workers N] [--format csv|jsonl]
//   pmlab validate <config>
//   pmlab scenarios [--json]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pmlab/experiment.hpp"

namespace {

int DoRun(const std::string& source, const pmlab::RunOverrides& overrides) {
  const pmlab::RunStatus s = pmlab::RunExperiment(source, overrides);
  if (s.exit_code != pmlab::kExitOk) {
    std::cerr << s.error.dump() << '\n';
    return s.exit_code;
  }
  nlohmann::json ok = {{"status", "ok"}, {"out_dir", s.out_dir.string()}, {"outputs", s.outputs}};
  std::cout << ok.dump() << '\n';
  return pmlab::kExitOk;
}

int DoValidate(const std::string& path) {
  const pmlab::ValidationReport r = pmlab::ValidateConfigFile(path);
  if (r.io_error) {
    std::cerr << nlohmann::json{{"status", "error"}, {"error", "io"}, {"message", *r.io_error},
                                {"exit_code", pmlab::kExitIo}}
                     .dump()
              << '\n';
    return pmlab::kExitIo;
  }
  nlohmann::json report = {{"status", r.violations.empty() ? "valid" : "invalid"},
                           {"violations", pmlab::ViolationsToJson(r.violations)}};
  std::cout << report.dump(2) << '\n';
  return r.violations.empty() ? pmlab::kExitOk : pmlab::kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pmlab: predict-then-modify simulation lab"};
  app.require_subcommand(1);

  std::string source;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  std::optional<std::string> format;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file or preset name");
  run->add_option("config", source, "config file (JSON) or preset name")->required();
  run->add_option("--seed", seed, "override the top-level seed");
  run->add_option("--out-dir", out_dir, "override the output directory");
  run->add_option("--workers", workers, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  run->add_option("--format", format, "tabular output format")
      ->check(CLI::IsMember({"csv", "jsonl"}));

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Statically validate a config file");
  validate->add_option("config", validate_path, "config file (JSON)")->required();

  bool as_json = false;
  auto* scenarios = app.add_subcommand("scenarios", "List experiment presets");
  scenarios->add_flag("--json", as_json, "machine-readable catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pmlab::kExitValidation;
  }

  try {
    if (*run) return DoRun(source, {seed, out_dir, workers, format});
    if (*validate) return DoValidate(validate_path);
    if (*scenarios) {
      if (as_json) {
        std::cout << pmlab::CatalogJson().dump(2) << '\n';
      } else {
        std::cout << pmlab::CatalogText();
      }
      return pmlab::kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"status", "error"}, {"error", "internal"}, {"message", e.what()},
                                {"exit_code", pmlab::kExitInternal}}
                     .dump()
              << '\n';
    return pmlab::kExitInternal;
  }
  return pmlab::kExitInternal;
}
