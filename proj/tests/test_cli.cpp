// Copyright 2026 The psde Authors.
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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "psde/cli.hpp"

namespace psde {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / ("psde_cli_" + std::string(info->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  int call(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }
  std::string dir(const std::string& name) const { return (root_ / name).string(); }
  static std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path root_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, DissipativeLyapunovAuditPasses) {
  const int code = call({"check-lyapunov", "--out", dir("a"), "--set", "model.name=dissipative", "--set",
                         "lyapunov.points_per_shell=16"});
  EXPECT_EQ(code, kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(root_ / "a" / "generator.csv"));
  EXPECT_TRUE(fs::exists(root_ / "a" / kManifestName));
}

TEST_F(CliTest, FrozenSimulateRowsAreConstant) {
  const int code = call({"simulate", "--out", dir("f"), "--set", "model.name=frozen", "--set", "sim.x0=2.5",
                         "--set", "sim.n_paths=3", "--set", "sim.dt=0.1"});
  ASSERT_EQ(code, kExitOk) << err_.str();
  std::ifstream in(root_ / "f" / "paths.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "path_id,t,x_1,event_kind,event_norm");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string id, t, x;
    std::getline(cells, id, ',');
    std::getline(cells, t, ',');
    std::getline(cells, x, ',');
    EXPECT_EQ(x, "2.5") << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3u * 11u);
}

TEST_F(CliTest, UnknownKeyIsUsageErrorNamingKey) {
  EXPECT_EQ(call({"simulate", "--out", dir("u"), "--set", "model.nam=lorenz"}), kExitUsage);
  EXPECT_NE(err_.str().find("model.nam"), std::string::npos) << err_.str();

  const fs::path cfg = root_ / "bad.cfg";
  std::ofstream(cfg) << "run.seed = 4\nmodel.nam = lorenz\n";
  EXPECT_EQ(call({"simulate", "--config", cfg.string()}), kExitUsage);
  EXPECT_NE(err_.str().find("model.nam"), std::string::npos);
  EXPECT_NE(err_.str().find(":2"), std::string::npos) << err_.str();
}

TEST_F(CliTest, UnknownModelParameterIsUsageError) {
  EXPECT_EQ(call({"simulate", "--out", dir("p"), "--set", "model.params.aa=1"}), kExitUsage);
  EXPECT_NE(err_.str().find("model.params.aa"), std::string::npos) << err_.str();
}

TEST_F(CliTest, ConfigRoundTrip) {
  RunConfig config;
  config.set("model.name", "lorenz");
  config.set("model.params.alpha", "10,0,2");
  config.set("sim.x0", "1,1,1");
  config.set("feller.ladder", "0.1, 0.2");
  std::istringstream in(config.serialize());
  EXPECT_EQ(RunConfig::parse(in), config);
}

TEST_F(CliTest, ManifestReplayIsByteIdentical) {
  const std::vector<std::string> sets = {"--set", "model.name=dissipative", "--set", "sim.n_paths=20",
                                         "--set", "sim.horizon=0.5", "--set", "sim.dt=0.01",
                                         "--set", "levy.kind=stable", "--set", "levy.dim=2",
                                         "--seed", "99"};
  std::vector<std::string> first{"simulate", "--out", dir("one")};
  first.insert(first.end(), sets.begin(), sets.end());
  ASSERT_EQ(call(first), kExitOk) << err_.str();
  const fs::path manifest = root_ / "one" / kManifestName;
  ASSERT_EQ(call({"replay", "--config", manifest.string(), "--out", dir("two")}), kExitOk) << err_.str();
  const std::string a = slurp(root_ / "one" / "paths.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(root_ / "two" / "paths.csv"));
}

TEST_F(CliTest, ThreadCountDoesNotChangeOutput) {
  for (const char* threads : {"1", "4"}) {
    ASSERT_EQ(call({"simulate", "--out", dir(std::string("t") + threads), "--threads", threads, "--set",
                    "sim.n_paths=16", "--set", "sim.horizon=0.2", "--set", "sim.dt=0.01"}),
              kExitOk)
        << err_.str();
  }
  EXPECT_EQ(slurp(root_ / "t1" / "paths.csv"), slurp(root_ / "t4" / "paths.csv"));
}

TEST_F(CliTest, HelpListsFlagsAndKeys) {
  EXPECT_EQ(call({"simulate", "--help"}), kExitOk);
  const std::string help = out_.str();
  for (const char* flag : {"--config", "--seed", "--out", "--threads", "--set", "sim.dt", "lyapunov.radii"}) {
    EXPECT_NE(help.find(flag), std::string::npos) << flag;
  }
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(call({}), kExitUsage);
  EXPECT_EQ(call({"no-such-command"}), kExitUsage);
  EXPECT_EQ(call({"replay"}), kExitUsage);
  EXPECT_EQ(call({"simulate", "--set", "sim.dt=-1", "--out", dir("neg")}), kExitUsage);
}

TEST_F(CliTest, VerdictFailureExitsOne) {
  // No noise and a target far from the deterministic orbit: no evidence.
  EXPECT_EQ(call({"irreducibility", "--out", dir("i"), "--set", "model.params.sigma=0", "--set",
                  "model.params.c=0", "--set", "irreducibility.target=3", "--set", "sim.n_paths=50", "--set",
                  "sim.dt=0.01"}),
            kExitVerdictFailure)
      << err_.str();
}

TEST_F(CliTest, NumericalFailureExitsThree) {
  const fs::path model = root_ / "cubic.model";
  std::ofstream(model) << "dim = 1\ndrift.1 = 1 x1^3\ndiffusion.1.1 = 0\n";
  EXPECT_EQ(call({"simulate", "--out", dir("n"), "--set", "model.name=custom", "--set",
                  "model.params.file=" + model.string(), "--set", "sim.x0=2", "--set", "sim.horizon=2", "--set",
                  "sim.n_paths=2", "--set", "sim.dt=0.01"}),
            kExitNumerical);
}

TEST_F(CliTest, EveryCommandRunsOnSmallConfig) {
  for (const auto& name : command_names()) {
    std::vector<std::string> args{name, "--out", dir(name), "--set", "sim.n_paths=40", "--set", "sim.dt=0.01",
                                  "--set", "lyapunov.points_per_shell=4", "--set", "lyapunov.time_samples=2",
                                  "--set", "periodicity.k_max=2", "--set", "cesaro.n=2", "--set", "law.bootstrap=10",
                                  "--set", "bel.direction=1", "--set", "dynkin.h=0.01"};
    // periodic_ou has no builtin certificate.
    if (name == "check-lyapunov") args.insert(args.end(), {"--set", "model.name=dissipative"});
    const int code = call(args);
    EXPECT_TRUE(code == kExitOk || code == kExitVerdictFailure) << name << ": " << err_.str();
    EXPECT_TRUE(fs::exists(root_ / name / kManifestName)) << name;
  }
}

}  // namespace
}  // namespace psde
