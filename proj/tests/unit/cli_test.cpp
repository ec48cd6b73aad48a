#include "sarbot/cli.hpp"
#include "sarbot/config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sarbot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = sarbot::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("sarbot-cli-" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::vector<fs::path> run_dirs() const {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root_)) {
      if (e.is_directory()) dirs.push_back(e.path());
    }
    return dirs;
  }

  fs::path root_;
};

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(invoke({"--help"}).code, 0);
  EXPECT_EQ(invoke({}).code, 4);
  EXPECT_EQ(invoke({"fly"}).code, 4);
}

TEST_F(Cli, InvalidRuleIsAConfigError) {
  const Result r = invoke({"trial", "--rule", "adam", "--out", root_.string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("adam"), std::string::npos) << r.err;
  EXPECT_TRUE(run_dirs().empty());
}

TEST_F(Cli, UnknownOverrideAndBadFile) {
  EXPECT_EQ(invoke({"trial", "--set", "learning.speed=3", "--out", root_.string()}).code, 4);
  const fs::path bad = root_ / "bad.yaml";
  std::ofstream(bad) << "seed: 1\nrobot:\n  wheels: 3\n";
  const Result r = invoke({"trial", "-c", bad.string(), "--out", root_.string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("bad.yaml:3:3"), std::string::npos) << r.err;
}

TEST_F(Cli, TrialWithoutSuccessWritesArtifacts) {
  const Result r = invoke({"trial", "--eta", "e^-5", "--seed", "3", "--set", "max_duration=15",
                           "--set", "calibration.enabled=false", "--out", root_.string()});
  EXPECT_EQ(r.code, 2) << r.err;
  const auto dirs = run_dirs();
  ASSERT_EQ(dirs.size(), 1u);
  for (const char* name : {"config.yaml", "trial.csv", "trajectory.csv", "distances.csv", "metrics.csv",
                           "events.log", "heatmap_layer1.pgm", "weights.txt"}) {
    EXPECT_TRUE(fs::exists(dirs[0] / name)) << name;
  }
  EXPECT_EQ(dirs[0].filename().string().size(), 16u + 1u + 16u);
  std::ifstream csv(dirs[0] / "trial.csv");
  std::string header, columns;
  std::getline(csv, header);
  std::getline(csv, columns);
  EXPECT_EQ(header.rfind("# config_hash=", 0), 0u);
  EXPECT_EQ(columns, "t,E,Ebar,A_R,A_P,MC,kappa");

  // The written config reproduces the run's hash.
  const auto cfg = sarbot::config::load(dirs[0] / "config.yaml");
  EXPECT_NE(dirs[0].filename().string().find(sarbot::config::hash_hex(sarbot::config::config_hash(cfg))),
            std::string::npos);
  EXPECT_EQ(cfg.trial.seed, 3u);
  EXPECT_EQ(cfg.trial.max_duration, 15.0);
}

TEST_F(Cli, AbortExitsThree) {
  const Result r = invoke({"trial", "--set", "track.kind=straight", "--set", "track.length=40",
                           "--set", "track.margin=10", "--set", "calibration.enabled=false",
                           "--out", root_.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("aborted"), std::string::npos);
}

TEST_F(Cli, CalibrateReportsAndWrites) {
  // Without a reflex the probe runs open loop; the gain is still finite.
  const Result open = invoke({"calibrate", "--set", "reflex.reflex_gain=0"});
  ASSERT_EQ(open.code, 0) << open.err;
  std::istringstream lines(open.out);
  std::string key;
  double gain = 1.0;
  lines >> key >> gain;
  EXPECT_EQ(key, "loop_gain");
  EXPECT_TRUE(std::isfinite(gain));

  const fs::path derived = root_ / "calibrated.yaml";
  const Result r = invoke({"calibrate", "-w", derived.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cfg = sarbot::config::load(derived);
  EXPECT_FALSE(cfg.trial.calibration.enabled);
  EXPECT_LT(cfg.trial.reflex.loop_gain, 0.0);
}

TEST_F(Cli, BatchAndPreview) {
  const Result b = invoke({"batch", "--rules", "sar,gdm", "--seeds", "1,2", "--etas", "e^-5",
                           "--set", "max_duration=15", "--out", root_.string()});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto dirs = run_dirs();
  ASSERT_EQ(dirs.size(), 1u);
  std::ifstream trials(dirs[0] / "trials.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(trials, line)) rows += !line.empty() && line[0] != '#';
  EXPECT_EQ(rows, 1u + 4u);
  EXPECT_TRUE(fs::exists(dirs[0] / "summary.csv"));

  const fs::path image = root_ / "track.pgm";
  EXPECT_EQ(invoke({"track-preview", "--out", image.string(), "--mirror"}).code, 0);
  EXPECT_TRUE(fs::exists(image));
  EXPECT_EQ(invoke({"track-preview"}).code, 4);
}

}  // namespace
