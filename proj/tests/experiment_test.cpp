#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cifnet/experiment.hpp"

using namespace cifnet;
namespace fs = std::filesystem;

namespace {

RunConfig synthetic_config(std::size_t increment = 2) {
  RunConfig c;
  c.synthetic = SyntheticSpec{.num_classes = 10, .dim = 16, .per_class = 250, .separation = 8.0};
  c.increment = increment;
  c.seeds = {0};
  return c;
}

class ExperimentDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cifnet_exp_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  fs::path dir_;
};

}  // namespace

TEST(RunConfig, ParsesNestedJson) {
  const auto j = nlohmann::json::parse(R"({
    "synthetic": {"classes": 6, "dim": 8, "per_class": 50, "separation": 5, "seed": 3},
    "increment": 3, "seeds": [1, 2],
    "buffer": {"per_class": 7, "disable_oversampling": true},
    "rolann": {"lambda": 0.5, "clamp_epsilon": 0.1}
  })");
  const auto c = config_from_json(j);
  ASSERT_TRUE(c.synthetic);
  EXPECT_EQ(c.synthetic->num_classes, 6u);
  EXPECT_EQ(c.synthetic_seed, 3u);
  EXPECT_EQ(c.increment, 3u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(c.buffer_per_class, 7u);
  EXPECT_TRUE(c.disable_oversampling);
  EXPECT_FALSE(c.disable_buffer);
  EXPECT_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.clamp_epsilon, 0.1);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, RejectsBadConfigs) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"bogus": 1})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"buffer": {"size": 1}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"increment": "two"})")), ConfigError);
  RunConfig none;
  EXPECT_THROW(none.validate(), ConfigError);
  RunConfig both = synthetic_config();
  both.train_path = "x";
  EXPECT_THROW(both.validate(), ConfigError);
  RunConfig no_test;
  no_test.train_path = "x";
  EXPECT_THROW(no_test.validate(), ConfigError);
  RunConfig bad = synthetic_config();
  bad.lambda = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = synthetic_config();
  bad.increment = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = synthetic_config();
  bad.seeds.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(RunConfig, EchoRoundTripsAndHashIgnoresSeeds) {
  RunConfig c = synthetic_config();
  c.seeds = {4, 5};
  const auto echo = config_echo(c);
  const RunConfig back = config_from_json(echo);
  EXPECT_EQ(config_echo(back), echo);
  RunConfig other = c;
  other.seeds = {9};
  EXPECT_EQ(config_hash(config_echo(other)), config_hash(echo));
  other.increment = 5;
  EXPECT_NE(config_hash(config_echo(other)), config_hash(echo));
  EXPECT_EQ(config_hash(echo).size(), 16u);
}

TEST(RunExperiment, OneAccuracyPerTask) {
  const auto run = run_experiment(synthetic_config(), 0);
  EXPECT_EQ(run.report.per_task_accuracy.size(), 5u);
  EXPECT_EQ(run.report.per_task_wall_ms.size(), 5u);
  EXPECT_EQ(run.report.classes_seen, (std::vector<std::size_t>{2, 4, 6, 8, 10}));
  EXPECT_EQ(run.report.new_neuron_activation_on_past.size(), 4u);
  EXPECT_NEAR(run.report.average_accuracy, average_accuracy(run.report.per_task_accuracy), 1e-12);
  EXPECT_EQ(run.report.buffer_bytes, 10u * 20u * 16u * 4u);
  EXPECT_GT(run.report.svd_calls, 0u);
}

TEST(RunExperiment, DeterministicReport) {
  const auto a = run_experiment(synthetic_config(), 7);
  const auto b = run_experiment(synthetic_config(), 7);
  EXPECT_EQ(to_json(a.report).dump(2), to_json(b.report).dump(2));
}

TEST(RunExperiment, DisabledBufferHasNoBytes) {
  RunConfig c = synthetic_config();
  c.disable_buffer = true;
  const auto run = run_experiment(c, 0);
  EXPECT_EQ(run.report.buffer_bytes, 0u);
  EXPECT_EQ(run.report.config_echo["buffer"]["disable"], true);
}

TEST(RunExperiment, EvaluatesOnCumulativeClasses) {
  // Task 1 evaluation only sees test records of the first two classes; the
  // accuracy after the last task covers all ten.
  RunConfig c = synthetic_config();
  const auto data = load_run_data(c, 0);
  const auto plan = split_tasks(data.train, 2, 0);
  const auto test = remap_to_split(data.test, plan.split);
  EXPECT_EQ(seen_subset(test, 2).size(), 100u);
  EXPECT_EQ(seen_subset(test, 10).size(), 500u);
}

TEST(RunExperiment, MaxClassesLimitsTasks) {
  RunConfig c = synthetic_config(2);
  c.synthetic->num_classes = 12;
  c.synthetic->dim = 16;
  c.max_classes = 6;
  const auto run = run_experiment(c, 1);
  EXPECT_EQ(run.report.per_task_accuracy.size(), 3u);
}

TEST(Ablation, SingleTaskVariantsCoincide) {
  const auto rows = run_ablation(synthetic_config(10));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].variant, "full");
  EXPECT_EQ(rows[1].variant, "no_oversampling");
  EXPECT_EQ(rows[2].variant, "no_buffer");
  for (const auto& r : rows) {
    EXPECT_EQ(r.per_seed[0].per_task_accuracy, rows[0].per_seed[0].per_task_accuracy);
  }
  const std::string csv = ablation_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "variant,average_accuracy,final_accuracy");
}

TEST(Ablation, NoBufferIsWorst) {
  RunConfig c = synthetic_config();
  c.seeds = {0, 1};
  const auto rows = run_ablation(c);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_GT(rows[0].per_seed[s].average_accuracy, rows[2].per_seed[s].average_accuracy);
    EXPECT_GT(rows[1].per_seed[s].average_accuracy, rows[2].per_seed[s].average_accuracy);
  }
}

TEST_F(ExperimentDir, TrainWritesReportsPerSeed) {
  RunConfig c = synthetic_config();
  c.seeds = {0, 1};
  c.output_dir = dir_.string();
  c.save_classifier = true;
  const auto reports = train_all_seeds(c);
  ASSERT_EQ(reports.size(), 2u);
  for (std::uint64_t s : {0, 1}) {
    const auto d = seed_dir(dir_, s);
    EXPECT_TRUE(fs::exists(d / "report.json"));
    EXPECT_TRUE(fs::exists(d / "timing.json"));
    EXPECT_TRUE(fs::exists(d / "classifier.bin"));
    const std::string csv = slurp(d / "report.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  }
  EXPECT_TRUE(fs::exists(dir_ / "summary.json"));
}

TEST_F(ExperimentDir, AggregateOneRun) {
  RunConfig c = synthetic_config();
  c.output_dir = dir_.string();
  train_all_seeds(c);
  const auto agg = aggregate_reports({dir_});
  EXPECT_EQ(agg.reports_read, 1u);
  EXPECT_EQ(std::count(agg.csv.begin(), agg.csv.end(), '\n'), 1 + 5);
}

TEST_F(ExperimentDir, AggregateTwoSeedsHasMean) {
  RunConfig c = synthetic_config();
  c.seeds = {0, 1};
  c.output_dir = dir_.string();
  const auto reports = train_all_seeds(c);
  const auto agg = aggregate_reports({dir_});
  EXPECT_EQ(std::count(agg.csv.begin(), agg.csv.end(), '\n'), 1 + 10);
  EXPECT_EQ(agg.csv.substr(0, agg.csv.find('\n')), "config_hash,seed,task,accuracy,mean_accuracy");
  // last line: seed 1, task 5; mean over both seeds' final accuracy
  std::istringstream lines(agg.csv);
  std::string line, last;
  while (std::getline(lines, line)) last = line;
  const double mean = std::stod(last.substr(last.rfind(',') + 1));
  EXPECT_NEAR(mean, (reports[0].final_accuracy + reports[1].final_accuracy) / 2, 1e-12);
}

TEST_F(ExperimentDir, AggregateSkipsCorruptReports) {
  RunConfig c = synthetic_config();
  c.output_dir = (dir_ / "good").string();
  train_all_seeds(c);
  fs::create_directories(dir_ / "bad");
  std::ofstream(dir_ / "bad" / "report.json") << "{not json";
  const auto agg = aggregate_reports({dir_});
  EXPECT_EQ(agg.reports_read, 1u);
  EXPECT_EQ(agg.warnings.size(), 1u);
}

TEST_F(ExperimentDir, AggregateFailsWithoutReports) {
  EXPECT_THROW(aggregate_reports({dir_}), FormatError);
  std::ofstream(dir_ / "report.json") << "[]";
  EXPECT_THROW(aggregate_reports({dir_}), FormatError);
}

TEST_F(ExperimentDir, RealDataFromFiles) {
  auto [train, test] = generate_synthetic({.num_classes = 4, .dim = 6, .per_class = 60, .separation = 8, .seed = 2});
  save_embeddings(train, dir_ / "train.cemb", EmbeddingFormat::binary);
  save_embeddings(test, dir_ / "test.csv", EmbeddingFormat::csv);
  RunConfig c;
  c.train_path = (dir_ / "train.cemb").string();
  c.test_path = (dir_ / "test.csv").string();
  c.increment = 2;
  const auto run = run_experiment(c, 0);
  EXPECT_EQ(run.report.per_task_accuracy.size(), 2u);
  EXPECT_GE(run.report.final_accuracy, 0.95);
}
