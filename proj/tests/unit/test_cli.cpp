/*
 * Copyright 2026 The vadkit Authors. All Rights Reserved.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "temp_dir.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kSmall = " dataset.train_normal=16 dataset.test_normal=6 dataset.test_anomalous=6 dataset.size=32";

std::string config(const std::string& name) { return std::string(VADKIT_CONFIG_DIR) + "/" + name; }

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(VADKIT_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, RunWritesReportManifestAndMaps) {
  vadkit::testing::TempDir dir;
  const fs::path out = dir / "run";
  ASSERT_EQ(run_cli("run --config " + config("synthetic_padim.json") + " --output-dir " + out.string() + kSmall,
                    dir / "log.txt"),
            0)
      << read_text(dir / "log.txt");
  const json report = read_json(out / "report.json");
  for (const char* key : {"command", "config_digest", "method", "scenario", "steps", "metrics", "timestamp"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_EQ(report["metrics"]["image_auroc"].get<double>(), 1.0);
  const json manifest = read_json(out / "manifest.json");
  EXPECT_EQ(manifest["config_digest"], report["config_digest"]);
  for (const char* key : {"normalization", "seeds", "recorded_choices", "overrides"}) {
    EXPECT_TRUE(manifest.contains(key)) << key;
  }
  EXPECT_TRUE(fs::exists(out / "maps" / "synthetic" / "index.json"));
  EXPECT_TRUE(fs::exists(out / "checkpoints" / "synthetic.ckpt"));
}

TEST(Cli, RerunIsIdenticalApartFromTimestamp) {
  vadkit::testing::TempDir dir;
  json reports[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = dir / ("r" + std::to_string(i));
    ASSERT_EQ(run_cli("run --config " + config("synthetic_stfpm.json") + " --output-dir " + out.string() + kSmall +
                          " trainer.epochs=2",
                      dir / "log.txt"),
              0);
    reports[i] = read_json(out / "report.json");
    reports[i].erase("timestamp");
  }
  EXPECT_EQ(reports[0], reports[1]);
  EXPECT_EQ(read_text(dir / "r0" / "checkpoints" / "synthetic.ckpt"),
            read_text(dir / "r1" / "checkpoints" / "synthetic.ckpt"));
}

TEST(Cli, ConfigErrorsExitTwoWithoutOutput) {
  vadkit::testing::TempDir dir;
  const fs::path out = dir / "never";
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string() + " --output-dir " + out.string(),
                    dir / "log.txt"),
            2);
  EXPECT_EQ(run_cli("run --config " + config("synthetic_padim.json") + " --output-dir " + out.string() +
                        " method.name=\"\\\"nope\\\"\"",
                    dir / "log.txt"),
            2);
  EXPECT_NE(read_text(dir / "log.txt").find("nope"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, EvalWithoutCheckpointIsRuntimeError) {
  vadkit::testing::TempDir dir;
  const fs::path out = dir / "eval";
  EXPECT_EQ(run_cli("eval --config " + config("synthetic_padim.json") + " --output-dir " + out.string() + kSmall,
                    dir / "log.txt"),
            3);
  ASSERT_TRUE(fs::exists(out / "error.json"));
  EXPECT_TRUE(read_json(out / "error.json").contains("message"));
}

TEST(Cli, TrainThenEvalMatchesRun) {
  vadkit::testing::TempDir dir;
  const fs::path both = dir / "both";
  const std::string base = " --config " + config("synthetic_patchcore.json") + " --output-dir ";
  ASSERT_EQ(run_cli("train" + base + both.string() + kSmall, dir / "log.txt"), 0);
  ASSERT_EQ(run_cli("eval" + base + both.string() + kSmall, dir / "log.txt"), 0);
  ASSERT_EQ(run_cli("run" + base + (dir / "run").string() + kSmall, dir / "log.txt"), 0);
  EXPECT_EQ(read_json(both / "report.json")["metrics"], read_json(dir / "run" / "report.json")["metrics"]);
}

TEST(Cli, SplitSimRawIsBitIdentical) {
  vadkit::testing::TempDir dir;
  const fs::path out = dir / "split";
  ASSERT_EQ(run_cli("split-sim --bits 32 --transport pipe --config " + config("synthetic_padim.json") +
                        " --output-dir " + out.string() + kSmall,
                    dir / "log.txt"),
            0)
      << read_text(dir / "log.txt");
  const std::string text = read_text(out / "split_report.json");
  EXPECT_NE(text.find("\"bit_identical_to_monolithic\": true"), std::string::npos) << text.substr(0, 2000);
}

TEST(Cli, ProfileReportsParameters) {
  vadkit::testing::TempDir dir;
  const fs::path out = dir / "profile";
  ASSERT_EQ(run_cli("profile --config " + config("synthetic_padim.json") + " --output-dir " + out.string(),
                    dir / "log.txt"),
            0)
      << read_text(dir / "log.txt");
  EXPECT_NE(read_text(dir / "log.txt").find("1392"), std::string::npos) << read_text(dir / "log.txt");
}

}  // namespace
