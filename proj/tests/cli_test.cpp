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

// Drives the pmlab executable end to end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "pmlab/config.hpp"
#include "pmlab/output.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pmlab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Result Cli(const std::string& args) {
  const fs::path dir = fs::temp_directory_path();
  const fs::path out = dir / "pmlab_cli_stdout.txt";
  const fs::path err = dir / "pmlab_cli_stderr.txt";
  const std::string cmd = std::string(PMLAB_CLI) + " " + args + " >" + out.string() + " 2>" +
                          err.string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), Slurp(out), Slurp(err)};
}

fs::path WriteConfig(const fs::path& dir, const std::string& name, const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p;
}

TEST(Cli, ScenariosListsPresets) {
  const Result r = Cli("scenarios");
  ASSERT_EQ(r.code, 0);
  for (const auto& e : pmlab::kCatalog) {
    EXPECT_NE(r.out.find(std::string(e.name)), std::string::npos) << e.name;
  }
  const Result j = Cli("scenarios --json");
  ASSERT_EQ(j.code, 0);
  const json arr = json::parse(j.out);
  ASSERT_EQ(arr.size(), std::size(pmlab::kCatalog));
  int scenarios = 0;
  for (const auto& e : arr) {
    scenarios += e.at("scenario").get<bool>();
    EXPECT_FALSE(e.at("description").get<std::string>().empty());
  }
  EXPECT_EQ(scenarios, 3);
}

TEST(Cli, ValidateReportsViolations) {
  const fs::path dir = Scratch("validate");
  EXPECT_EQ(Cli("validate " + WriteConfig(dir, "ok.json", R"({"experiment": "scenario2"})").string())
                .code,
            0);
  const Result bad = Cli(
      "validate " +
      WriteConfig(dir, "bad.json",
                  R"({"experiment": "decompose", "world": {"noise_sd": -1},
                      "policy": {"kind": "shrinkage", "lambda": 1.5}})")
          .string());
  EXPECT_EQ(bad.code, 2);
  const json report = json::parse(bad.out);
  EXPECT_EQ(report.at("violations").size(), 2u);
  EXPECT_EQ(Cli("validate " + (dir / "missing.json").string()).code, 3);
}

TEST(Cli, RunRejectsOutOfRangeLambda) {
  const fs::path dir = Scratch("lambda");
  const Result r = Cli("run " +
                       WriteConfig(dir, "c.json",
                                   R"({"experiment": "generalization",
                                       "policy": {"kind": "shrinkage", "lambda": 1.5}})")
                           .string() +
                       " --out-dir " + (dir / "out").string());
  EXPECT_EQ(r.code, 2);
  const json err = json::parse(r.err);
  EXPECT_EQ(err.at("error"), "validation");
  EXPECT_EQ(err.at("violations")[0].at("field"), "policy.lambda");
  EXPECT_NE(err.at("violations")[0].at("message").get<std::string>().find("[0, 1]"),
            std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, UnknownPresetListsAvailable) {
  const Result r = Cli("run scenario9");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("scenario1"), std::string::npos);
  EXPECT_NE(r.err.find("optimal-shift"), std::string::npos);
}

TEST(Cli, MissingConfigIsIoError) {
  EXPECT_EQ(Cli("run /nonexistent/dir/config.json").code, 3);
}

TEST(Cli, UnwritableOutputIsIoError) {
  const fs::path dir = Scratch("io");
  const fs::path blocker = dir / "file";
  std::ofstream(blocker) << "x";
  const Result r = Cli("run scenario3 --out-dir " + (blocker / "sub").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(json::parse(r.err).at("error"), "io");
}

TEST(Cli, Scenario2DecompositionSchema) {
  const fs::path dir = Scratch("scenario2");
  const Result r = Cli("run scenario2 --out-dir " + dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(Slurp(dir / "decomposition.csv"));
  std::string header;
  std::getline(csv, header);
  for (const char* col : {"x", "sigma2", "sigma2_tilde", "bias", "var_fhat", "cate", "epe",
                          "epe_tilde"}) {
    EXPECT_NE(("," + header + ",").find(std::string(",") + col + ","), std::string::npos) << col;
  }
  int rows = 0;
  for (std::string line; std::getline(csv, line);) rows += !line.empty();
  EXPECT_EQ(rows, 3);
  const json manifest = json::parse(Slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("experiment"), "scenario2");
  // The hash is recomputable from the written config.
  const auto cfg = pmlab::ParseConfig(json::parse(Slurp(dir / "config.json")));
  ASSERT_TRUE(cfg.config.has_value());
  EXPECT_EQ(manifest.at("config_hash"), pmlab::Sha256Hex(pmlab::ToJson(*cfg.config, false).dump()));
  for (const auto& o : manifest.at("outputs")) {
    EXPECT_EQ(o.at("sha256"), pmlab::Sha256Hex(Slurp(dir / o.at("file").get<std::string>())));
  }
}

constexpr const char* kSmallDecompose = R"({
  "experiment": "decompose", "n_train": 500, "reps": 300,
  "policy": {"kind": "constant_shift", "delta": 0.05, "noise_sd": 0.01}
})";

TEST(Cli, SameConfigTwiceIsByteIdentical) {
  const fs::path dir = Scratch("twice");
  const fs::path cfg = WriteConfig(dir, "c.json", kSmallDecompose);
  ASSERT_EQ(Cli("run " + cfg.string() + " --out-dir " + (dir / "a").string()).code, 0);
  const std::string first = Slurp(dir / "a" / "decomposition.csv");
  const std::string first_cfg = Slurp(dir / "a" / "config.json");
  ASSERT_EQ(Cli("run " + cfg.string() + " --out-dir " + (dir / "a").string()).code, 0);
  EXPECT_EQ(first, Slurp(dir / "a" / "decomposition.csv"));
  EXPECT_EQ(first_cfg, Slurp(dir / "a" / "config.json"));
}

TEST(Cli, WorkerCountDoesNotChangeResults) {
  const fs::path dir = Scratch("workers");
  const fs::path cfg = WriteConfig(dir, "c.json", kSmallDecompose);
  ASSERT_EQ(Cli("run " + cfg.string() + " --workers 1 --out-dir " + (dir / "w1").string()).code, 0);
  ASSERT_EQ(Cli("run " + cfg.string() + " --workers 4 --out-dir " + (dir / "w4").string()).code, 0);
  EXPECT_EQ(Slurp(dir / "w1" / "decomposition.csv"), Slurp(dir / "w4" / "decomposition.csv"));
  const json m1 = json::parse(Slurp(dir / "w1" / "manifest.json"));
  const json m4 = json::parse(Slurp(dir / "w4" / "manifest.json"));
  EXPECT_EQ(m1.at("config_hash"), m4.at("config_hash"));
}

TEST(Cli, RerunFromWrittenConfigReproducesOutputs) {
  const fs::path dir = Scratch("rerun");
  ASSERT_EQ(Cli("run showcase --seed 9 --out-dir " + (dir / "a").string()).code, 0);
  fs::remove(dir / "a" / "users.jsonl");
  fs::remove(dir / "a" / "summary.csv");
  ASSERT_EQ(Cli("run " + (dir / "a" / "config.json").string() + " --out-dir " +
                (dir / "b").string()).code,
            0);
  ASSERT_EQ(Cli("run " + (dir / "a" / "config.json").string()).code, 0);
  EXPECT_EQ(Slurp(dir / "a" / "users.jsonl"), Slurp(dir / "b" / "users.jsonl"));
  EXPECT_EQ(Slurp(dir / "a" / "summary.csv"), Slurp(dir / "b" / "summary.csv"));
}

TEST(Cli, SeedOverrideChangesResults) {
  const fs::path dir = Scratch("seed");
  ASSERT_EQ(Cli("run showcase --seed 1 --out-dir " + (dir / "a").string()).code, 0);
  ASSERT_EQ(Cli("run showcase --seed 2 --out-dir " + (dir / "b").string()).code, 0);
  EXPECT_NE(Slurp(dir / "a" / "users.jsonl"), Slurp(dir / "b" / "users.jsonl"));
}

TEST(Cli, JsonlFormat) {
  const fs::path dir = Scratch("jsonl");
  ASSERT_EQ(Cli("run ab-test --format jsonl --out-dir " + dir.string()).code, 0);
  EXPECT_TRUE(fs::exists(dir / "replicates.jsonl"));
  EXPECT_FALSE(fs::exists(dir / "replicates.csv"));
  std::istringstream lines(Slurp(dir / "summary.jsonl"));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(json::parse(line).at("replicates"), 2000);
}

TEST(Cli, BadFlagIsValidationError) {
  EXPECT_EQ(Cli("run scenario3 --format xml").code, 2);
  EXPECT_EQ(Cli("run scenario3 --workers 0").code, 2);
}

}  // namespace
