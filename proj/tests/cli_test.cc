// Copyright 2026 The qseek Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qseek/cli.h"

#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "qseek/episode_log.h"
#include "test_util.h"

namespace qseek {
namespace {

struct Result {
  int code;
  std::string out, err;
};

Result Cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(Cli({"synth", "--images", "300", "--queries", "4", "--captions-out", F("caps.jsonl"),
                   "--dataset-out", F("ds.jsonl")})
                  .code,
              kExitOk);
    const Result embed = Cli({"embed", "--input", F("caps.jsonl"), "--out", F("pool.jsonl"), "--mock-dim", "32"});
    ASSERT_EQ(embed.code, kExitOk) << embed.err;
  }
  std::string F(const std::string& name) const { return dir_.File(name); }
  std::vector<std::string> RunArgs(const std::string& out) const {
    return {"run", "--pool", F("pool.jsonl"), "--dataset", F("ds.jsonl"), "--out", F(out),
            "--rounds", "2", "--mock-dim", "32", "--m", "3"};
  }

  testing::TempDir dir_;
};

TEST_F(CliTest, RunThenEval) {
  const Result run = Cli(RunArgs("logs.jsonl"));
  ASSERT_EQ(run.code, kExitOk) << run.err;
  const auto logs = LoadEpisodeLogs(F("logs.jsonl"));
  ASSERT_EQ(logs.size(), 4u);
  EXPECT_EQ(logs[0].rounds.size(), 3u);
  const auto manifest = nlohmann::json::parse(testing::ReadFile(F("logs.jsonl.manifest.json")));
  EXPECT_EQ(manifest["episode"]["m"], 3);

  const Result eval = Cli({"eval", "--log", F("logs.jsonl"), "--K", "10"});
  ASSERT_EQ(eval.code, kExitOk) << eval.err;
  const auto report = nlohmann::json::parse(eval.out);
  EXPECT_EQ(report["num_queries"], 4);
  EXPECT_EQ(report["k"], 10);
  EXPECT_NE(eval.err.find("BRI"), std::string::npos);
  const Result cut = Cli({"eval", "--log", F("logs.jsonl"), "--cutoff", "1", "--out", F("r.json")});
  ASSERT_EQ(cut.code, kExitOk);
  EXPECT_EQ(nlohmann::json::parse(testing::ReadFile(F("r.json")))["rounds_evaluated"], 2);
}

TEST_F(CliTest, RerunIsByteIdentical) {
  ASSERT_EQ(Cli(RunArgs("a.jsonl")).code, kExitOk);
  auto args = RunArgs("b.jsonl");
  args.push_back("--parallelism");
  args.push_back("3");
  ASSERT_EQ(Cli(args).code, kExitOk);
  EXPECT_EQ(testing::ReadFile(F("a.jsonl")), testing::ReadFile(F("b.jsonl")));
}

TEST_F(CliTest, AblateM) {
  const Result r = Cli({"ablate-m", "--pool", F("pool.jsonl"), "--dataset", F("ds.jsonl"), "--out",
                        F("ablate.json"), "--rounds", "2", "--mock-dim", "32", "--n", "6",
                        "--m-values", "2,5,10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto table = nlohmann::json::parse(testing::ReadFile(F("ablate.json")));
  ASSERT_EQ(table.size(), 3u);
  EXPECT_EQ(table[2]["m"], 10);
  EXPECT_EQ(table[2]["effective_m"], 6);
  EXPECT_TRUE(table[2]["clamped"].get<bool>());
  EXPECT_NE(r.err.find("clamp"), std::string::npos);
  for (const auto& row : table) EXPECT_TRUE(row["bri"].is_number());
}

TEST_F(CliTest, ConfigFileAndPrecedence) {
  testing::WriteFile(F("run.toml"), "rounds = 1\nm = 2\nseed = 9\n");
  auto args = RunArgs("cfg.jsonl");
  // Drop --rounds 2 from the command line so the file value applies.
  args.erase(args.begin() + 7, args.begin() + 9);
  args.insert(args.end(), {"--config", F("run.toml")});
  ASSERT_EQ(Cli(args).code, kExitOk);
  EXPECT_EQ(LoadEpisodeLogs(F("cfg.jsonl"))[0].rounds.size(), 2u);
  auto manifest = nlohmann::json::parse(testing::ReadFile(F("cfg.jsonl.manifest.json")));
  EXPECT_EQ(manifest["episode"]["seed"], 9);
  // The command-line --m 3 beats the file's m = 2.
  EXPECT_EQ(manifest["episode"]["m"], 3);

  ::setenv("QSEEK_SEED", "11", 1);
  ::setenv("QSEEK_ROUNDS", "3", 1);
  auto env_args = RunArgs("env.jsonl");
  env_args.erase(env_args.begin() + 7, env_args.begin() + 9);
  env_args.insert(env_args.end(), {"--config", F("run.toml")});
  ASSERT_EQ(Cli(env_args).code, kExitOk);
  ::unsetenv("QSEEK_SEED");
  ::unsetenv("QSEEK_ROUNDS");
  manifest = nlohmann::json::parse(testing::ReadFile(F("env.jsonl.manifest.json")));
  // File over environment.
  EXPECT_EQ(manifest["episode"]["seed"], 9);
  EXPECT_EQ(manifest["episode"]["max_rounds"], 1);
}

TEST_F(CliTest, ConfigSectionsAndMissingFile) {
  testing::WriteFile(F("multi.toml"), "[serve]\nport = 1\n[run]\nrounds = 1\nearly_stop = true\n");
  auto args = RunArgs("sec.jsonl");
  args.erase(args.begin() + 7, args.begin() + 9);
  args.insert(args.end(), {"--config=" + F("multi.toml")});
  const Result r = Cli(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto manifest = nlohmann::json::parse(testing::ReadFile(F("sec.jsonl.manifest.json")));
  EXPECT_EQ(manifest["episode"]["max_rounds"], 1);
  EXPECT_TRUE(manifest["episode"]["early_stop"].get<bool>());
  auto missing = RunArgs("x.jsonl");
  missing.insert(missing.end(), {"--config", F("nope.toml")});
  EXPECT_EQ(Cli(missing).code, kExitUsage);
}

TEST_F(CliTest, EnvironmentFillsUnsetOptions) {
  ::setenv("QSEEK_ROUNDS", "1", 1);
  auto args = RunArgs("env.jsonl");
  args.erase(args.begin() + 7, args.begin() + 9);
  const Result r = Cli(args);
  ::unsetenv("QSEEK_ROUNDS");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(LoadEpisodeLogs(F("env.jsonl"))[0].rounds.size(), 2u);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Cli({"run", "--pool", F("pool.jsonl")}).code, kExitUsage);
  EXPECT_EQ(Cli({"eval", "--log", F("logs.jsonl"), "--K", "0"}).code, kExitUsage);
  auto bad_backend = RunArgs("x.jsonl");
  bad_backend.insert(bad_backend.end(), {"--backend.chat", "magic"});
  EXPECT_EQ(Cli(bad_backend).code, kExitUsage);
  const Result missing = Cli({"eval", "--log", F("does-not-exist.jsonl")});
  EXPECT_EQ(missing.code, kExitRuntime);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);
  auto many_m = RunArgs("x.jsonl");
  many_m.erase(many_m.end() - 2, many_m.end());
  many_m.insert(many_m.end(), {"--m", "50", "--n", "6"});
  // More clusters than candidates is clamped, not an error.
  const Result clamped = Cli(many_m);
  EXPECT_EQ(clamped.code, kExitOk) << clamped.err;
  EXPECT_EQ(Cli({"eval", "--log", F("logs.jsonl"), "--K", "10", "--K", "5"}).code, kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST_F(CliTest, RemoteBackendWithoutEndpointIsARuntimeError) {
  auto args = RunArgs("x.jsonl");
  args.insert(args.end(), {"--backend.chat", "remote"});
  const Result r = Cli(args);
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("endpoint"), std::string::npos);
}

TEST_F(CliTest, BinaryRunsStandalone) {
  const std::string cmd = std::string(QSEEK_CLI_PATH) + " eval --log " + F("missing.jsonl") + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), kExitRuntime);
}

}  // namespace
}  // namespace qseek
