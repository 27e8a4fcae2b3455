// Drives the built `cifnet` executable end to end.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cifnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " '" + std::string(CIFNET_CLI_PATH) + "' " + args + " > '" +
                            (dir_ / "stdout").string() + "' 2> '" + (dir_ / "stderr").string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir_ / "stdout"), slurp(dir_ / "stderr")};
  }

  std::string p(const std::string& name) const { return "'" + (dir_ / name).string() + "'"; }

  static constexpr const char* kSynth = "--synthetic --classes 10 --dim 16 --per-class 250 --separation 8 --increment 2";
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, TrainSyntheticWritesFiveTasks) {
  const auto r = run(std::string("train ") + kSynth + " --seeds 0 -o " + p("out"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "out/seed_0/report.json"));
  EXPECT_EQ(j["per_task_accuracy"].size(), 5u);
  EXPECT_TRUE(fs::exists(dir_ / "out/seed_0/report.csv"));
}

TEST_F(Cli, DisableBufferRecordedInReport) {
  const auto r = run(std::string("train ") + kSynth + " --disable-buffer -o " + p("out"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "out/seed_0/report.json"));
  EXPECT_EQ(j["config_echo"]["buffer"]["disable"], true);
  EXPECT_EQ(j["buffer_bytes"], 0);
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  ASSERT_EQ(run(std::string("train ") + kSynth + " --seeds 3 -o " + p("a")).code, 0);
  ASSERT_EQ(run(std::string("train ") + kSynth + " --seeds 3 -o " + p("b")).code, 0);
  EXPECT_EQ(slurp(dir_ / "a/seed_3/report.json"), slurp(dir_ / "b/seed_3/report.json"));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  std::ofstream(dir_ / "cfg.json") << R"({"synthetic": {"classes": 6, "dim": 8, "per_class": 50, "separation": 8},
                                          "increment": 2, "output_dir": ")" << (dir_ / "from_file").string() << R"("})";
  auto r = run("train -c " + p("cfg.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "from_file/seed_0/report.json"));
  r = run("train -c " + p("cfg.json") + " --increment 3 -o " + p("flag"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "flag/seed_0/report.json"));
  EXPECT_EQ(j["per_task_accuracy"].size(), 2u);
}

TEST_F(Cli, EnvironmentOverridesOutputDir) {
  std::ofstream(dir_ / "cfg.json") << R"({"synthetic": {"classes": 4, "dim": 4, "per_class": 20}, "increment": 2,
                                          "output_dir": ")" << (dir_ / "from_file").string() << R"("})";
  const auto r = run("train -c " + p("cfg.json"), "CIFNET_OUTPUT_DIR=" + p("from_env"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "from_env/seed_0/report.json"));
  EXPECT_FALSE(fs::exists(dir_ / "from_file"));
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  std::ofstream(dir_ / "bad.json") << R"({"unknown_key": 1})";
  auto r = run("train -c " + p("bad.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error kind=config code=2"), std::string::npos) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  EXPECT_EQ(run("train").code, 2);  // no data source
  EXPECT_EQ(run("train --synthetic --lambda -1").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(Cli, SynthInspectTrainOnFiles) {
  auto r = run("synth --classes 4 --dim 6 --per-class 50 --seed 1 --train-out " + p("train.cemb") +
               " --test-out " + p("test.cemb"));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run("inspect " + p("train.cemb") + " --classes");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["dim"], 6);
  EXPECT_EQ(j["count"], 160);
  EXPECT_EQ(j["classes"]["0"], 40);
  r = run("train --train " + p("train.cemb") + " --test " + p("test.cemb") + " --increment 2 -o " + p("out"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "out/seed_0/report.json"));
}

TEST_F(Cli, FormatErrorsExitThree) {
  ASSERT_EQ(run("synth --classes 2 --dim 3 --per-class 10 --train-out " + p("a.cemb") + " --test-out " +
                p("b.cemb")).code, 0);
  std::string bytes = slurp(dir_ / "a.cemb");
  std::ofstream(dir_ / "short.cemb", std::ios::binary) << bytes.substr(0, bytes.size() - 4);
  auto r = run("inspect " + p("short.cemb"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("kind=format"), std::string::npos);
  r = run("train --train " + p("short.cemb") + " --test " + p("b.cemb") + " --increment 1 -o " + p("out"));
  EXPECT_EQ(r.code, 3);
  std::ofstream(dir_ / "junk.cemb") << "nonsense bytes here, not an embedding file";
  EXPECT_EQ(run("inspect " + p("junk.cemb")).code, 3);
}

TEST_F(Cli, ReportAggregatesRuns) {
  ASSERT_EQ(run(std::string("train ") + kSynth + " --seeds 0,1 -o " + p("runs")).code, 0);
  auto r = run("report " + p("runs") + " -o " + p("agg.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir_ / "agg.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
  EXPECT_NE(csv.find("mean_accuracy"), std::string::npos);
  fs::create_directories(dir_ / "empty");
  EXPECT_NE(run("report " + p("empty")).code, 0);
}

TEST_F(Cli, AblateWritesThreeRowTable) {
  const auto r = run(std::string("ablate ") + kSynth + " --seeds 0 -o " + p("abl"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir_ / "abl/ablation.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("\nfull,"), std::string::npos);
  EXPECT_NE(csv.find("\nno_oversampling,"), std::string::npos);
  EXPECT_NE(csv.find("\nno_buffer,"), std::string::npos);
}
