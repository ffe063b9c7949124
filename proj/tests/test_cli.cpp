// Copyright 2026 The sketchsynth Authors
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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "sketchsynth/lowering.hpp"
#include "sketchsynth/pipeline.hpp"
#include "sketchsynth/schedule.hpp"
#include "test_support.hpp"

namespace sketchsynth {
namespace {

namespace fs = std::filesystem;
using testing::fixture;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sketchsynth_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "sketchsynth");
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, SolveTwoRankDemo) {
  ASSERT_EQ(run({"solve", "--topology", fixture("demo2.json"), "--output", path("a.json"), "--ef", path("a.xml")}), cli::kOk)
      << err_.str();
  const Schedule s = load_schedule_file(path("a.json"));
  EXPECT_EQ(s.num_ranks, 2);
  EXPECT_NE(out_.str().find("lower bound"), std::string::npos);
  EXPECT_NE(out_.str().find("algbw"), std::string::npos);
  EXPECT_EQ(parse_ef(slurp(path("a.xml"))).gpus.size(), 2u);
}

TEST_F(Cli, DisconnectingSketchIsInfeasibleAndNamesTheChunk) {
  std::ofstream(path("cut.json")) << R"({"intranode_sketch": {"strategy": "none", "excluded_links": [[0, 1]]}})";
  EXPECT_EQ(run({"solve", "--topology", fixture("demo2.json"), "--sketch", path("cut.json"), "--output", path("a.json")}),
            cli::kInfeasible);
  EXPECT_NE(err_.str().find("stage routing"), std::string::npos);
  EXPECT_NE(err_.str().find("chunk 0"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("a.json")));
}

TEST_F(Cli, SimulateAndLowerRoundTrip) {
  ASSERT_EQ(run({"solve", "--topology", fixture("ring4.json"), "--collective", "allreduce", "--output", path("ar.json")}),
            cli::kOk);
  EXPECT_EQ(run({"simulate", "--topology", fixture("ring4.json"), "--algorithm", path("ar.json"), "--report",
                 path("rep.json")}),
            cli::kOk);
  EXPECT_NE(out_.str().find("postcondition pass"), std::string::npos);
  EXPECT_NE(slurp(path("rep.json")).find("total_time_us"), std::string::npos);
  EXPECT_EQ(run({"lower", "--topology", fixture("ring4.json"), "--algorithm", path("ar.json"), "--instances", "2",
                 "--output", path("ar.xml")}),
            cli::kOk);
  EXPECT_EQ(parse_ef(slurp(path("ar.xml"))).instances, 2);
}

TEST_F(Cli, SimulateFlagsBrokenSchedule) {
  ASSERT_EQ(run({"solve", "--topology", fixture("ring4.json"), "--output", path("ag.json")}), cli::kOk);
  Schedule s = load_schedule_file(path("ag.json"));
  s.sends.pop_back();
  std::ofstream(path("bad.json")) << serialize_schedule(s);
  EXPECT_EQ(run({"simulate", "--topology", fixture("ring4.json"), "--algorithm", path("bad.json")}), cli::kInvalid);
  EXPECT_NE(out_.str().find("postcondition fail"), std::string::npos);
  EXPECT_EQ(run({"lower", "--topology", fixture("ring4.json"), "--algorithm", path("bad.json"), "--output", path("x.xml")}),
            cli::kInvalid);
  EXPECT_NE(err_.str().find("stage lowering"), std::string::npos);
}

TEST_F(Cli, CompareEmitsOneRowPerSizeAndAlgorithm) {
  ASSERT_EQ(run({"solve", "--topology", fixture("ring4.json"), "--output", path("ag.json")}), cli::kOk);
  ASSERT_EQ(run({"compare", "--topology", fixture("ring4.json"), "--sizes", "1K,32K,1M", "--algorithm", path("ag.json"),
                 "--output", path("cmp.csv")}),
            cli::kOk);
  std::istringstream csv(slurp(path("cmp.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "size,algorithm,time_us,algbw_mb_per_us,speedup");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    if (line.find(",ag,") != std::string::npos) {
      EXPECT_GE(std::stod(line.substr(line.rfind(',') + 1)), 1.0 - 1e-9) << line;
    }
  }
  EXPECT_EQ(rows, 6);
}

TEST_F(Cli, CompareSynthesizesPerSizeWithoutAlgorithms) {
  ASSERT_EQ(run({"compare", "--topology", fixture("ring4.json"), "--sizes", "1M,1K"}), cli::kOk) << err_.str();
  const std::string text = out_.str();
  EXPECT_LT(text.find("1K,"), text.find("1M,"));
  EXPECT_NE(text.find(",synthesized,"), std::string::npos);
}

TEST_F(Cli, EmptySweepIsValidationError) {
  EXPECT_EQ(run({"compare", "--topology", fixture("ring4.json"), "--sizes", ""}), cli::kInvalid);
  EXPECT_NE(err_.str().find("stage compare"), std::string::npos);
  EXPECT_EQ(run({"compare", "--topology", fixture("ring4.json")}), cli::kInvalid);
}

TEST_F(Cli, ExportLp) {
  ASSERT_EQ(run({"export-lp", "--topology", fixture("switch3.json"), "--sketch", fixture("switch3-uc-min.json"),
                 "--output", path("r.lp")}),
            cli::kOk);
  const std::string lp = slurp(path("r.lp"));
  EXPECT_NE(lp.find("Minimize"), std::string::npos);
  EXPECT_NE(lp.find("Binaries"), std::string::npos);
  ASSERT_EQ(run({"export-lp", "--topology", fixture("ring4.json"), "--stage", "contiguity", "--output", path("c.lp")}),
            cli::kOk);
  EXPECT_EQ(run({"export-lp", "--topology", fixture("ring4.json"), "--stage", "ordering", "--output", path("o.lp")}),
            cli::kInvalid);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), cli::kInvalid);
  EXPECT_EQ(run({"solve", "--output", path("a.json")}), cli::kInvalid);
  EXPECT_EQ(run({"solve", "--topology", fixture("ring4.json"), "--collective", "gather", "--output", path("a.json")}),
            cli::kInvalid);
  EXPECT_EQ(run({"solve", "--topology", path("missing.json"), "--output", path("a.json")}), cli::kInvalid);
  EXPECT_EQ(run({"solve", "--topology", fixture("ring4.json"), "--time-limit", "0", "--output", path("a.json")}),
            cli::kInvalid);
  EXPECT_EQ(run({"--help"}), cli::kOk);
}

TEST_F(Cli, SolverLimitWritesIncumbent) {
  // One branch-and-bound node proves the routing but not the contiguity.
  EXPECT_EQ(run({"solve", "--topology", fixture("ndv2x2.json"), "--sketch", fixture("ndv2-sk-1.json"), "--chunks", "2",
                 "--node-limit", "1", "--output", path("a.json")}),
            cli::kTimeout);
  EXPECT_TRUE(fs::exists(path("a.json")));
  EXPECT_NE(err_.str().find("limit"), std::string::npos);
  EXPECT_NE(out_.str().find("feasible-incumbent"), std::string::npos);
}

TEST_F(Cli, LimitWithoutIncumbent) {
  EXPECT_EQ(run({"solve", "--topology", fixture("switch3.json"), "--sketch", fixture("switch3-uc-min.json"), "--chunks",
                 "2", "--node-limit", "1", "--output", path("a.json")}),
            cli::kNoIncumbent);
  EXPECT_NE(err_.str().find("stage routing"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("a.json")));
}

TEST_F(Cli, StageHookSeesEveryFinishedStage) {
  // solve keeps these as <output>.<stage>.partial.json when a later stage fails.
  SynthesisOptions o;
  o.kind = CollectiveKind::kAllreduce;
  std::vector<std::string> stages;
  o.on_stage = [&](const std::string& stage, const std::string& json) {
    stages.push_back(stage);
    EXPECT_FALSE(json.empty());
  };
  synthesize(load_topology_file(fixture("ring4.json")), identity_sketch(), o);
  EXPECT_EQ(stages, (std::vector<std::string>{"routing", "contiguity", "combining"}));
}

}  // namespace
}  // namespace sketchsynth
