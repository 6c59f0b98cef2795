#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "mini_profile.hpp"

namespace policytwin {
namespace {

namespace fs = std::filesystem;

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(POLICYTWIN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_synth(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(POLICYTWIN_SYNTH_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, FullPipelineExitsZero) {
  testing::MiniProfile p;
  const fs::path log = p.root() / "log.txt";
  const std::string cfg = "--config " + p.config_path().string();
  for (const char* cmd : {"simulate", "calibrate", "evaluate", "counterfactual", "ablate"}) {
    ASSERT_EQ(run(std::string(cmd) + " " + cfg, log), 0) << cmd << "\n" << testing::read_file(log);
  }
  EXPECT_NE(testing::read_file(log).find("Ablations"), std::string::npos);
  EXPECT_EQ(run("counterfactual " + cfg + " --engine replay --scenarios " + (p.root() / "scenarios.json").string(), log),
            0)
      << testing::read_file(log);
}

TEST(Cli, UsageAndConfigErrorsExitOne) {
  testing::MiniProfile p;
  const fs::path log = p.root() / "log.txt";
  EXPECT_EQ(run("", log), 1);
  EXPECT_EQ(run("simulate", log), 1);
  EXPECT_EQ(run("simulate --config " + (p.root() / "absent.json").string(), log), 1);
  EXPECT_EQ(run("simulate --config " + p.config_path().string() + " --engine psychic", log), 1);
  EXPECT_EQ(run("--help", log), 0);

  p.config["split"]["test"] = {"2020-08-01", "2020-09-30"};
  p.save();
  EXPECT_EQ(run("simulate --config " + p.config_path().string(), log), 1);
  EXPECT_NE(testing::read_file(log).find("overlap"), std::string::npos);
  EXPECT_FALSE(fs::exists(p.root() / "out"));
  EXPECT_FALSE(fs::exists(p.root() / "cache"));
}

TEST(Cli, MissingUpstreamArtifactExitsOne) {
  testing::MiniProfile p;
  EXPECT_EQ(run("evaluate --config " + p.config_path().string(), p.root() / "log.txt"), 1);
}

TEST(Cli, BadDataExitsTwo) {
  testing::MiniProfile p;
  testing::write_file(p.root() / "data/policy.csv", "date,stringency,government_response\n2020-03-20,140,50\n");
  EXPECT_EQ(run("simulate --config " + p.config_path().string(), p.root() / "log.txt"), 2);
  EXPECT_NE(testing::read_file(p.root() / "log.txt").find("row 1"), std::string::npos);
}

TEST(Cli, ReplayMissExitsThree) {
  testing::MiniProfile p;
  EXPECT_EQ(run("simulate --engine replay --config " + p.config_path().string(), p.root() / "log.txt"), 3);
}

TEST(Cli, SeedOverrideChangesTheHash) {
  testing::MiniProfile p;
  const fs::path log = p.root() / "log.txt";
  ASSERT_EQ(run("simulate --seed-override 11 --config " + p.config_path().string(), log), 0);
  const auto manifest = nlohmann::json::parse(testing::read_file(p.out("manifest_simulate.json")));
  EXPECT_EQ(manifest["seeds"]["population"], 11);
  EXPECT_NE(manifest["config_hash"], p.load().hash);
}

TEST(Cli, ShippedProfileRunsOnFreshSyntheticData) {
  testing::TempDir dir;
  for (const char* f : {"run.json", "prompt.txt", "population.json", "scenarios.json"}) {
    fs::copy_file(fs::path(POLICYTWIN_PROFILE_DIR) / f, dir / f);
  }
  const fs::path log = dir / "log.txt";
  ASSERT_EQ(run_synth("--out-dir " + (dir / "data").string(), log), 0) << testing::read_file(log);
  // The shipped data directory is generated by the same tool with the same defaults.
  EXPECT_EQ(testing::read_file(dir / "data/policy.csv"),
            testing::read_file(fs::path(POLICYTWIN_PROFILE_DIR) / "data/policy.csv"));
  const std::string cfg = " --config " + (dir / "run.json").string();
  for (const char* cmd : {"simulate", "calibrate", "evaluate", "counterfactual"}) {
    ASSERT_EQ(run(cmd + cfg, log), 0) << cmd << "\n" << testing::read_file(log);
  }
  const auto cf = nlohmann::json::parse(testing::read_file(dir / "out/counterfactual.json"));
  EXPECT_EQ(cf["focus_bounded"], true);
}

}  // namespace
}  // namespace policytwin
