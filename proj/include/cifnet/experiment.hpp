#pragma once

// Experiment harness: configuration, the per-task train/evaluate loop, the
// three-way ablation and report aggregation.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cifnet/buffer.hpp"
#include "cifnet/classifier_io.hpp"
#include "cifnet/dataset.hpp"
#include "cifnet/embedding_io.hpp"
#include "cifnet/error.hpp"
#include "cifnet/incremental.hpp"
#include "cifnet/metrics.hpp"
#include "cifnet/rolann.hpp"
#include "cifnet/synthetic.hpp"

namespace cifnet {

/// Environment variable the CLI reads to override the configured output
/// directory (a --out flag still wins).
inline constexpr const char* kOutputDirEnv = "CIFNET_OUTPUT_DIR";

struct RunConfig {
  // Exactly one data source.
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::uint64_t> synthetic_seed;  // unset: follow the run seed
  std::string train_path;
  std::string test_path;
  std::optional<std::size_t> max_classes;

  std::size_t increment = 10;
  std::size_t buffer_per_class = 20;
  double lambda = 0.01;
  double clamp_epsilon = 0.05;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs";
  bool disable_buffer = false;
  bool disable_oversampling = false;
  bool save_classifier = false;

  void validate() const {
    if (synthetic.has_value() == !train_path.empty())
      throw ConfigError("exactly one of data.train or synthetic must be given");
    if (!synthetic && test_path.empty()) throw ConfigError("data.test is required with data.train");
    if (synthetic) {
      if (synthetic->num_classes == 0 || synthetic->dim == 0 || synthetic->per_class == 0)
        throw ConfigError("synthetic counts must be positive");
      if (!(synthetic->separation >= 0.0)) throw ConfigError("synthetic.separation must be >= 0");
    }
    if (max_classes && *max_classes == 0) throw ConfigError("data.max_classes must be positive");
    if (increment == 0) throw ConfigError("increment must be positive");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!(clamp_epsilon > 0.0 && clamp_epsilon <= 0.5))
      throw ConfigError("clamp_epsilon must lie in (0, 0.5]");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }

  std::size_t effective_buffer() const { return disable_buffer ? 0 : buffer_per_class; }
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: bad value for " + where + key);
  }
}

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config: " + (where.empty() ? std::string("root") : where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ConfigError("config: unknown key " + where + key);
  }
}

}  // namespace detail

/// Nested JSON layout:
/// { "data": {"train", "test", "max_classes"},
///   "synthetic": {"classes", "dim", "per_class", "separation", "seed"},
///   "increment", "seeds", "output_dir", "save_classifier",
///   "buffer": {"per_class", "disable", "disable_oversampling"},
///   "rolann": {"lambda", "clamp_epsilon"} }
inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  using detail::reject_unknown;
  reject_unknown(j, {"data", "synthetic", "increment", "seeds", "output_dir", "save_classifier",
                     "buffer", "rolann"},
                 "");
  RunConfig c;
  if (j.contains("data") && !j.at("data").is_null()) {
    const auto& d = j.at("data");
    reject_unknown(d, {"train", "test", "max_classes"}, "data.");
    read_field(d, "train", c.train_path, "data.");
    read_field(d, "test", c.test_path, "data.");
    if (d.contains("max_classes") && !d.at("max_classes").is_null()) {
      std::size_t m = 0;
      read_field(d, "max_classes", m, "data.");
      c.max_classes = m;
    }
  }
  if (j.contains("synthetic") && !j.at("synthetic").is_null()) {
    const auto& s = j.at("synthetic");
    reject_unknown(s, {"classes", "dim", "per_class", "separation", "seed"}, "synthetic.");
    SyntheticSpec spec;
    read_field(s, "classes", spec.num_classes, "synthetic.");
    read_field(s, "dim", spec.dim, "synthetic.");
    read_field(s, "per_class", spec.per_class, "synthetic.");
    read_field(s, "separation", spec.separation, "synthetic.");
    if (s.contains("seed") && !s.at("seed").is_null()) {
      std::uint64_t seed = 0;
      read_field(s, "seed", seed, "synthetic.");
      c.synthetic_seed = seed;
    }
    c.synthetic = spec;
  }
  read_field(j, "increment", c.increment, "");
  read_field(j, "seeds", c.seeds, "");
  read_field(j, "output_dir", c.output_dir, "");
  read_field(j, "save_classifier", c.save_classifier, "");
  if (j.contains("buffer")) {
    const auto& b = j.at("buffer");
    reject_unknown(b, {"per_class", "disable", "disable_oversampling"}, "buffer.");
    read_field(b, "per_class", c.buffer_per_class, "buffer.");
    read_field(b, "disable", c.disable_buffer, "buffer.");
    read_field(b, "disable_oversampling", c.disable_oversampling, "buffer.");
  }
  if (j.contains("rolann")) {
    const auto& r = j.at("rolann");
    reject_unknown(r, {"lambda", "clamp_epsilon"}, "rolann.");
    read_field(r, "lambda", c.lambda, "rolann.");
    read_field(r, "clamp_epsilon", c.clamp_epsilon, "rolann.");
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

/// Everything that determines a run's results. The output directory is where
/// results go, not what they are, so it is left out.
inline nlohmann::json config_echo(const RunConfig& c) {
  nlohmann::json j;
  if (c.synthetic) {
    j["synthetic"] = {{"classes", c.synthetic->num_classes},
                      {"dim", c.synthetic->dim},
                      {"per_class", c.synthetic->per_class},
                      {"separation", c.synthetic->separation},
                      {"seed", c.synthetic_seed ? nlohmann::json(*c.synthetic_seed) : nlohmann::json()}};
  } else {
    j["data"] = {{"train", c.train_path},
                 {"test", c.test_path},
                 {"max_classes", c.max_classes ? nlohmann::json(*c.max_classes) : nlohmann::json()}};
  }
  j["increment"] = c.increment;
  j["seeds"] = c.seeds;
  j["save_classifier"] = c.save_classifier;
  j["buffer"] = {{"per_class", c.buffer_per_class},
                 {"disable", c.disable_buffer},
                 {"disable_oversampling", c.disable_oversampling}};
  j["rolann"] = {{"lambda", c.lambda}, {"clamp_epsilon", c.clamp_epsilon}};
  return j;
}

/// FNV-1a over the echo with the seed list removed, so runs that differ only
/// by seed share a key.
inline std::string config_hash(nlohmann::json echo) {
  echo.erase("seeds");
  const std::string text = echo.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

struct RunData {
  EmbeddingDataset train;
  EmbeddingDataset test;
};

inline RunData load_run_data(const RunConfig& c, std::uint64_t seed) {
  if (c.synthetic) {
    SyntheticSpec spec = *c.synthetic;
    spec.seed = c.synthetic_seed.value_or(seed);
    auto [train, test] = generate_synthetic(spec);
    return {std::move(train), std::move(test)};
  }
  RunData d{load_embeddings(c.train_path, format_for_path(c.train_path)),
            load_embeddings(c.test_path, format_for_path(c.test_path))};
  if (d.train.empty()) throw FormatError("training file " + c.train_path + " has no records");
  if (!d.test.empty() && d.test.dim() != d.train.dim())
    throw FormatError("test dim " + std::to_string(d.test.dim()) + " differs from train dim " +
                      std::to_string(d.train.dim()));
  return d;
}

struct RunOutcome {
  MetricsReport report;
  RolannClassifier classifier;
  ExpansionBuffer buffer;
};

/// Test records whose (dense) class id is below `seen`.
inline EmbeddingDataset seen_subset(const EmbeddingDataset& test, ClassId seen) {
  EmbeddingDataset out(test.dim());
  for (std::size_t i = 0; i < test.size(); ++i)
    if (test.label(i) < seen) out.add(test.embedding(i), test.label(i));
  return out;
}

/// Runs every task for one seed, evaluating after each task on the test
/// samples of all classes seen so far.
inline RunOutcome run_experiment(const RunConfig& config, std::uint64_t seed, const RunData& data) {
  config.validate();
  const TaskPlan plan = split_tasks(data.train, config.increment, seed, config.max_classes);
  const EmbeddingDataset test = remap_to_split(data.test, plan.split);

  RunOutcome out{MetricsReport{},
                 RolannClassifier(static_cast<Eigen::Index>(data.train.dim()), config.lambda,
                                  ActivationSpec::logistic(config.clamp_epsilon)),
                 ExpansionBuffer(data.train.dim(), config.effective_buffer(), seed)};
  MetricsReport& report = out.report;
  report.seed = seed;
  report.config_echo = config_echo(config);

  const IncrementalOptions options{.oversample = !config.disable_oversampling};
  TimeTracker timer;
  ClassId seen = 0;
  for (std::size_t k = 0; k < plan.tasks.size(); ++k) {
    timer.start();
    incremental_train(plan.tasks[k], out.classifier, out.buffer, options);
    timer.stop();
    seen += static_cast<ClassId>(plan.split.groups[k].size());

    const EmbeddingDataset eval = seen_subset(test, seen);
    if (eval.empty()) throw InputError("no test samples for the classes seen after task " + std::to_string(k + 1));
    if (out.classifier.num_classes() != seen)
      throw StateError("classifier does not cover the cumulative class set after task " +
                       std::to_string(k + 1));
    const Prediction pred = out.classifier.predict(eval.to_matrix());
    report.per_task_accuracy.push_back(task_accuracy(pred.labels, eval.labels()));
    report.classes_seen.push_back(seen);

    if (k > 0) {
      const ClassId first_new = seen - static_cast<ClassId>(plan.split.groups[k].size());
      const EmbeddingDataset past = seen_subset(test, first_new);
      if (!past.empty()) {
        const Prediction p = out.classifier.predict(past.to_matrix());
        report.new_neuron_activation_on_past.push_back(
            p.probabilities.bottomRows(static_cast<Eigen::Index>(seen - first_new)).mean());
      }
    }
  }
  report.per_task_wall_ms = timer.laps_ms();
  report.buffer_bytes = out.buffer.bytes();
  report.svd_calls = out.classifier.counters().svd_calls;
  report.absorbed_samples = out.classifier.counters().absorbed_samples;
  report.finalize();
  return out;
}

inline RunOutcome run_experiment(const RunConfig& config, std::uint64_t seed) {
  config.validate();
  return run_experiment(config, seed, load_run_data(config, seed));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

/// Writes report.json, report.csv, timing.json (and optionally classifier.bin)
/// into `dir`.
inline void write_run(const RunOutcome& run, const std::filesystem::path& dir, bool save_classifier) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", to_json(run.report).dump(2) + "\n");
  write_text(dir / "report.csv", to_csv(run.report));
  write_text(dir / "timing.json", timing_json(run.report).dump(2) + "\n");
  if (save_classifier) cifnet::save_classifier(run.classifier, dir / "classifier.bin");
}

inline std::filesystem::path seed_dir(const std::filesystem::path& root, std::uint64_t seed) {
  return root / ("seed_" + std::to_string(seed));
}

inline nlohmann::json summarize(const std::vector<MetricsReport>& reports) {
  nlohmann::json runs = nlohmann::json::array();
  std::vector<double> avg, fin;
  for (const auto& r : reports) {
    runs.push_back({{"seed", r.seed},
                    {"average_accuracy", r.average_accuracy},
                    {"final_accuracy", r.final_accuracy}});
    avg.push_back(r.average_accuracy);
    fin.push_back(r.final_accuracy);
  }
  return {{"runs", runs},
          {"mean_average_accuracy", average_accuracy(avg)},
          {"mean_final_accuracy", average_accuracy(fin)}};
}

/// Train subcommand: one run per seed under <out>/seed_<s>/, plus summary.json
/// when there are several seeds.
inline std::vector<MetricsReport> train_all_seeds(const RunConfig& config) {
  config.validate();
  const std::filesystem::path root = config.output_dir;
  std::vector<MetricsReport> reports;
  for (std::uint64_t seed : config.seeds) {
    RunOutcome run = run_experiment(config, seed);
    write_run(run, seed_dir(root, seed), config.save_classifier);
    reports.push_back(std::move(run.report));
  }
  if (reports.size() > 1) write_text(root / "summary.json", summarize(reports).dump(2) + "\n");
  return reports;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationRow {
  std::string variant;
  std::vector<MetricsReport> per_seed;
  double mean_average() const {
    std::vector<double> v;
    for (const auto& r : per_seed) v.push_back(r.average_accuracy);
    return average_accuracy(v);
  }
  double mean_final() const {
    std::vector<double> v;
    for (const auto& r : per_seed) v.push_back(r.final_accuracy);
    return average_accuracy(v);
  }
};

/// Full method, no oversampling, no buffer; all variants share seeds and data.
inline std::vector<AblationRow> run_ablation(const RunConfig& base) {
  base.validate();
  RunConfig full = base, no_oversampling = base, no_buffer = base;
  full.disable_buffer = full.disable_oversampling = false;
  no_oversampling.disable_buffer = false;
  no_oversampling.disable_oversampling = true;
  no_buffer.disable_buffer = true;
  no_buffer.disable_oversampling = false;

  std::vector<AblationRow> rows{{"full", {}}, {"no_oversampling", {}}, {"no_buffer", {}}};
  const RunConfig* variants[] = {&full, &no_oversampling, &no_buffer};
  for (std::uint64_t seed : base.seeds) {
    const RunData data = load_run_data(base, seed);
    for (std::size_t v = 0; v < 3; ++v)
      rows[v].per_seed.push_back(run_experiment(*variants[v], seed, data).report);
  }
  return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "variant,average_accuracy,final_accuracy\n";
  for (const auto& r : rows)
    out << r.variant << ',' << nlohmann::json(r.mean_average()).dump() << ','
        << nlohmann::json(r.mean_final()).dump() << '\n';
  return out.str();
}

inline std::string ablation_per_seed_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "variant,seed,average_accuracy,final_accuracy\n";
  for (const auto& r : rows)
    for (const auto& rep : r.per_seed)
      out << r.variant << ',' << rep.seed << ',' << nlohmann::json(rep.average_accuracy).dump() << ','
          << nlohmann::json(rep.final_accuracy).dump() << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Aggregation

struct AggregateResult {
  std::string csv;
  std::size_t reports_read = 0;
  std::vector<std::string> warnings;
};

/// Collects every report.json below the given directories into one CSV keyed
/// by (config_hash, seed, task), with the across-seed mean per (config, task).
inline AggregateResult aggregate_reports(const std::vector<std::filesystem::path>& dirs) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  AggregateResult result;
  for (const auto& d : dirs) {
    if (fs::is_regular_file(d)) {
      files.push_back(d);
      continue;
    }
    if (!fs::is_directory(d)) {
      result.warnings.push_back(d.string() + ": not a directory");
      continue;
    }
    for (const auto& e : fs::recursive_directory_iterator(d))
      if (e.is_regular_file() && e.path().filename() == "report.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());

  struct Row {
    std::string hash;
    std::uint64_t seed;
    std::size_t task;
    double accuracy;
  };
  std::vector<Row> rows;
  std::set<std::pair<std::string, std::uint64_t>> seen_runs;
  for (const auto& f : files) {
    try {
      std::ifstream in(f);
      const MetricsReport r = report_from_json(nlohmann::json::parse(in));
      const std::string hash = config_hash(r.config_echo);
      if (!seen_runs.emplace(hash, r.seed).second) {
        result.warnings.push_back(f.string() + ": duplicate of an earlier (config, seed), skipped");
        continue;
      }
      for (std::size_t k = 0; k < r.per_task_accuracy.size(); ++k)
        rows.push_back({hash, r.seed, k + 1, r.per_task_accuracy[k]});
      ++result.reports_read;
    } catch (const std::exception& e) {
      result.warnings.push_back(f.string() + ": " + e.what());
    }
  }
  if (result.reports_read == 0) {
    std::string why = files.empty() ? "no report.json found" : "no readable report.json";
    throw FormatError("report: " + why);
  }

  std::map<std::pair<std::string, std::size_t>, std::pair<double, std::size_t>> sums;
  for (const auto& r : rows) {
    auto& s = sums[{r.hash, r.task}];
    s.first += r.accuracy;
    s.second += 1;
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.hash, a.seed, a.task) < std::tie(b.hash, b.seed, b.task);
  });
  std::ostringstream out;
  out << "config_hash,seed,task,accuracy,mean_accuracy\n";
  for (const auto& r : rows) {
    const auto& s = sums.at({r.hash, r.task});
    out << r.hash << ',' << r.seed << ',' << r.task << ',' << nlohmann::json(r.accuracy).dump()
        << ',' << nlohmann::json(s.first / static_cast<double>(s.second)).dump() << '\n';
  }
  result.csv = out.str();
  return result;
}

}  // namespace cifnet
