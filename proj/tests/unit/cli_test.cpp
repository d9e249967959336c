/*
 * Copyright 2026 The qnet Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "qnet/container.hpp"
#include "qnet/eval.hpp"
#include "qnet/model.hpp"
#include "toy_models.hpp"

namespace qnet {
namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("qnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "qnet");
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), cli::kExitUsage);
  EXPECT_EQ(run({"build", "--arch", "vgg", "-o", p("m.qnet")}), cli::kExitUsage);
  EXPECT_EQ(run({"build", "--arch", "mobilenetv1", "--alpha", "2", "-o", p("m.qnet")}), cli::kExitUsage);
  EXPECT_EQ(run({"stats", "--model", p("missing.qnet")}), cli::kExitUsage);
  EXPECT_FALSE(err_.str().empty());
}

TEST_F(Cli, CorruptModelIsFormatError) {
  std::ofstream(p("junk.qnet")) << "garbage";
  EXPECT_EQ(run({"stats", "--model", p("junk.qnet")}), cli::kExitFormat);
}

TEST_F(Cli, UnsupportedDtypeTagIsCapabilityError) {
  const auto m = testing::two_layer_model(1);
  auto bytes = encode(pack(make_f32_model(m.graph, m.weights)));
  bytes[6] = 9;
  write_file_atomic(p("future.qnet"), bytes);
  EXPECT_EQ(run({"bench", "--model", p("future.qnet"), "--runs", "1", "--warmup", "0"}), cli::kExitCapability);
}

TEST_F(Cli, BuildQuantizeEvalBenchFlow) {
  ASSERT_EQ(run({"synth-data", "--per-class", "10", "--size", "32", "--seed", "4", "-o", p("data")}), cli::kExitOk)
      << err_.str();
  ASSERT_EQ(run({"build", "--arch", "mobilenetv1", "--alpha", "0.25", "--res", "96", "--classes", "3", "--seed",
                 "2", "-o", p("m.qnet")}),
            cli::kExitOk)
      << err_.str();
  ASSERT_EQ(run({"quantize", "--model", p("m.qnet"), "--dtype", "f16", "-o", p("h.qnet")}), cli::kExitOk) << err_.str();
  ASSERT_EQ(run({"quantize", "--model", p("m.qnet"), "--dtype", "i8", "--calib", p("data/manifest.jsonl"),
                 "--calib-samples", "4", "-o", p("q.qnet")}),
            cli::kExitOk)
      << err_.str();
  EXPECT_EQ(run({"quantize", "--model", p("m.qnet"), "--dtype", "i8", "-o", p("q2.qnet")}), cli::kExitUsage);

  ASSERT_EQ(run({"stats", "--model", p("m.qnet"), "--model", p("h.qnet"), "--model", p("q.qnet"), "--format", "json"}),
            cli::kExitOk);
  const auto table = nlohmann::json::parse(out_.str());
  EXPECT_EQ(table.at("sizes").size(), 3u);

  ASSERT_EQ(run({"eval", "--model", p("q.qnet"), "--manifest", p("data/manifest.jsonl"), "--split", "test", "-o",
                 p("report.json")}),
            cli::kExitOk)
      << err_.str();
  std::ifstream in(p("report.json"));
  EXPECT_NO_THROW(EvalReport::from_json(nlohmann::json::parse(in)));

  ASSERT_EQ(run({"bench", "--model", p("h.qnet"), "--runs", "2", "--warmup", "0", "--format", "text"}), cli::kExitOk);
  EXPECT_NE(out_.str().find("f16"), std::string::npos);
}

}  // namespace
}  // namespace qnet
