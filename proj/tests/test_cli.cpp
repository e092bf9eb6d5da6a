// Copyright 2026 The TensiForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tensiforge/bridge.hpp"
#include "tensiforge/cli.hpp"
#include "tensiforge/export.hpp"

namespace tensiforge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / ("tensiforge_cli_" + std::to_string(::getpid())));
    fs::create_directories(*dir_);
    const CliRun r = run({"build", "--n", "3", "--m", "3", "--radius-mm", "60", "--height-mm", "45",
                       "--out", path("tower.json")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }

  static fs::path* dir_;
};

fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, BuildWritesTwentyFourCables) {
  const json doc = json::parse(slurp(path("tower.json")));
  EXPECT_EQ(doc["cables"].size(), 24u);
  EXPECT_EQ(doc["tendons"].size(), 3u);
}

TEST_F(CliTest, BuildIsByteIdentical) {
  const CliRun r = run({"build", "--n", "3", "--m", "3", "--radius-mm", "60", "--height-mm", "45",
                     "--out", path("again.json")});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("24 cables"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(path("again.json")), slurp(path("tower.json")));
}

TEST_F(CliTest, BuildRejectsLayerCount) {
  const CliRun r = run({"build", "--n", "3", "--m", "4", "--out", path("bad.json")});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("layer rule"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(fs::exists(path("bad.json")));
  EXPECT_EQ(run({"build", "--n", "2", "--out", path("bad.json")}).code, kExitInput);
  EXPECT_EQ(run({"build", "--bogus"}).code, kExitInput);
  EXPECT_EQ(run({}).code, kExitInput);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, SimulateConvergesAndIsDeterministic) {
  const CliRun a = run({"simulate", "--scene", path("tower.json"), "--out", path("r1.json"),
                     "--scene-out", path("eq.json")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  ASSERT_EQ(run({"simulate", "--scene", path("tower.json"), "--out", path("r2.json")}).code, kExitOk);
  EXPECT_EQ(slurp(path("r1.json")), slurp(path("r2.json")));
  const json report = json::parse(slurp(path("r1.json")));
  EXPECT_TRUE(report["converged"].get<bool>());
  for (const auto& [cls, v] : report["residuals"].items()) EXPECT_LT(v.get<double>(), 1e-6) << cls;
  EXPECT_LT(report["max_speed"].get<double>(), 1e-5);

  actuation::Robot robot(exporter::import_scene_json(slurp(path("tower.json"))));
  const auto direct = robot.settle();
  EXPECT_EQ(report, json::parse(report_to_json(direct).dump()));
  const auto eq = exporter::import_scene_json(slurp(path("eq.json")));
  EXPECT_EQ(eq.provenance.count("homed"), 0u);
}

TEST_F(CliTest, SimulateStepBudgetExitsThree) {
  const CliRun r = run({"simulate", "--scene", path("tower.json"), "--max-steps", "1", "--out", path("short.json")});
  EXPECT_EQ(r.code, kExitSolver);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  const json report = json::parse(slurp(path("short.json")));
  EXPECT_FALSE(report["converged"].get<bool>());
}

TEST_F(CliTest, SimulateRejectsMissingAndBrokenScenes) {
  EXPECT_EQ(run({"simulate", "--scene", path("nope.json")}).code, kExitInput);
  std::ofstream(path("broken.json")) << "{\"spec\": {}}";
  const CliRun r = run({"simulate", "--scene", path("broken.json")});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("$."), std::string::npos) << r.err;
}

TEST_F(CliTest, ActuateZeroKeepsRestPose) {
  const CliRun r = run({"actuate", "--scene", path("tower.json"), "--alpha-deg", "0", "--beta-deg", "0",
                     "--out", path("posed0.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto posed = exporter::import_scene_json(slurp(path("posed0.json")));
  for (const auto& t : posed.tendons) EXPECT_EQ(t.factor, 1.0);
  auto sim = physics::build_sim(posed);
  const auto pose = actuation::measure_pose(sim, 0);
  EXPECT_NEAR(pose.alpha, 0.0, 1e-4);
  EXPECT_NEAR(pose.beta, 0.0, 1e-4);
}

TEST_F(CliTest, ActuateClosedLoopReachesTarget) {
  const CliRun r = run({"actuate", "--scene", path("tower.json"), "--alpha-deg", "10", "--closed-loop",
                     "--out", path("posed10.json"), "--trace", path("trace10.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json trace = json::parse(slurp(path("trace10.json")));
  EXPECT_TRUE(trace["converged"].get<bool>());
  const auto& last = trace["entries"].back();
  EXPECT_LT(std::abs(last["error"]["alpha"].get<double>()), 0.5 * actuation::kDegree);
  EXPECT_LE(last["iteration"].get<int>(), 200);
  const auto posed = exporter::import_scene_json(slurp(path("posed10.json")));
  EXPECT_EQ(posed.provenance.at("homed"), "true");
  EXPECT_LT(posed.tendons[0].factor, 1.0);
}

TEST_F(CliTest, ActuateBeyondThetaMaxExitsTwo) {
  const CliRun r = run({"actuate", "--scene", path("tower.json"), "--alpha-deg", "60"});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("theta_max"), std::string::npos) << r.err;
}

TEST_F(CliTest, ActuateControllerBudgetExitsFour) {
  const CliRun r = run({"actuate", "--scene", path("tower.json"), "--alpha-deg", "10", "--closed-loop",
                     "--max-iters", "1", "--tol-deg", "0.001", "--trace", path("trace_fail.json")});
  EXPECT_EQ(r.code, kExitController) << r.err;
  const json trace = json::parse(slurp(path("trace_fail.json")));
  EXPECT_FALSE(trace["converged"].get<bool>());
  EXPECT_EQ(trace["entries"].size(), 2u);
}

TEST_F(CliTest, MockLoopEndsWithAcksAndReplays) {
  const CliRun r = run({"loop", "--scene", path("tower.json"), "--mock", "--alpha-deg", "5",
                     "--transcript", path("loop.txt"), "--trace", path("loop_trace.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto transcript = bridge::Transcript::parse(slurp(path("loop.txt")));
  ASSERT_GE(transcript.entries.size(), 6u);
  std::vector<std::string> tail;
  for (auto it = transcript.entries.end() - 3; it != transcript.entries.end(); ++it) {
    EXPECT_EQ(it->dir, bridge::Direction::kRx);
    tail.push_back(it->line);
  }
  std::sort(tail.begin(), tail.end());
  EXPECT_EQ(tail, (std::vector<std::string>{"A 0", "A 1", "A 2"}));
  const json trace = json::parse(slurp(path("loop_trace.json")));
  EXPECT_TRUE(trace["converged"].get<bool>());

  const CliRun again = run({"replay", "--transcript", path("loop.txt"), "--scene", path("tower.json"),
                         "--out", path("replayed.txt")});
  EXPECT_EQ(again.code, kExitOk) << again.err;
  EXPECT_EQ(slurp(path("replayed.txt")), slurp(path("loop.txt")));
}

TEST_F(CliTest, MockLoopAtZeroMovesNothing) {
  const CliRun r = run({"loop", "--scene", path("tower.json"), "--mock", "--alpha-deg", "0",
                     "--transcript", path("loop0.txt")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const auto& e : bridge::Transcript::parse(slurp(path("loop0.txt"))).entries) {
    if (e.dir != bridge::Direction::kTx || e.line[0] != 'M') continue;
    const auto msg = std::get<bridge::SetMotor>(bridge::decode_message(e.line));
    EXPECT_EQ(msg.steps, 0) << e.line;
  }
}

TEST_F(CliTest, ReplayDivergenceExitsFive) {
  std::ofstream(path("forged.txt")) << "2026-01-01T00:00:00.000Z TX Q\n"
                                    << "2026-01-01T00:00:00.000Z RX S 0 1.00\n";
  const CliRun r = run({"replay", "--transcript", path("forged.txt")});
  EXPECT_EQ(r.code, kExitDevice);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, ExportWritesEightParts) {
  const fs::path parts = *dir_ / "parts";
  const CliRun r = run({"export", "--scene", path("tower.json"), "--parts-dir", parts.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(parts)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  ASSERT_EQ(files.size(), 8u);
  EXPECT_EQ(fs::file_size(parts / "tower_plate-L0.stl"), 484u);
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(f));
  ASSERT_EQ(run({"export", "--scene", path("tower.json"), "--parts-dir", parts.string()}).code, kExitOk);
  for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(slurp(files[i]), first[i]);
  EXPECT_EQ(run({"export", "--scene", path("tower.json"), "--parts-dir", parts.string(),
                 "--rod-sides", "2"}).code,
            kExitInput);
}

TEST_F(CliTest, BinaryUsesStandardStreams) {
  const std::string cmd = std::string(TENSIFORGE_CLI) + " build --m 5 --out " + path("x.json") + " >" +
                          path("stdout.txt") + " 2>" + path("stderr.txt");
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitInput);
  EXPECT_TRUE(slurp(path("stdout.txt")).empty());
  EXPECT_NE(slurp(path("stderr.txt")).find("layer rule"), std::string::npos);
}

}  // namespace
}  // namespace tensiforge::cli
