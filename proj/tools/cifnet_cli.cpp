// cifnet: class-incremental experiments over fixed embeddings.
//
//   cifnet train   [--config FILE] [overrides...]
//   cifnet ablate  [--config FILE] [overrides...]
//   cifnet report  DIR... [--out FILE]
//   cifnet synth   --train-out FILE --test-out FILE [generator options]
//   cifnet inspect FILE [--classes]
//
// Exit codes: 0 ok, 2 config/usage error, 3 data-format error, 4 numerical error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cifnet/cifnet.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumerical = 4;

int exit_code(cifnet::ErrorKind kind) {
  switch (kind) {
    case cifnet::ErrorKind::config:
    case cifnet::ErrorKind::input: return kExitConfig;
    case cifnet::ErrorKind::format: return kExitFormat;
    case cifnet::ErrorKind::numerical:
    case cifnet::ErrorKind::state: return kExitNumerical;
  }
  return 1;
}

/// Single-line, tab-free error record on stderr.
void report_error(const std::string& kind, int code, std::string message) {
  for (char& ch : message)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::cerr << "error kind=" << kind << " code=" << code << " message=" << nlohmann::json(message).dump()
            << std::endl;
}

// Flag values that override the config file. Unset optionals leave the file's value.
struct Overrides {
  std::string config_path;
  bool synthetic = false;
  std::optional<std::size_t> syn_classes, syn_dim, syn_per_class;
  std::optional<double> syn_separation;
  std::optional<std::uint64_t> syn_seed;
  std::string train, test;
  std::optional<std::size_t> max_classes;
  std::optional<std::size_t> increment, buffer_per_class;
  std::optional<double> lambda, clamp_epsilon;
  std::vector<std::uint64_t> seeds;
  std::string out;
  bool disable_buffer = false;
  bool disable_oversampling = false;
  bool save_classifier = false;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_flag("--synthetic", o.synthetic, "use the Gaussian generator as data source");
  cmd->add_option("--classes", o.syn_classes, "synthetic: number of classes");
  cmd->add_option("--dim", o.syn_dim, "synthetic: embedding width");
  cmd->add_option("--per-class", o.syn_per_class, "synthetic: samples per class (80/20 split)");
  cmd->add_option("--separation", o.syn_separation, "synthetic: min distance between means, in sigma");
  cmd->add_option("--data-seed", o.syn_seed, "synthetic: generator seed (default: run seed)");
  cmd->add_option("--train", o.train, "training embeddings (.csv or binary)");
  cmd->add_option("--test", o.test, "test embeddings (.csv or binary)");
  cmd->add_option("--max-classes", o.max_classes, "keep the first N classes after shuffling");
  cmd->add_option("--increment", o.increment, "classes per task");
  cmd->add_option("--buffer-per-class", o.buffer_per_class, "expansion buffer capacity per class");
  cmd->add_option("--lambda", o.lambda, "ridge regularization");
  cmd->add_option("--clamp-epsilon", o.clamp_epsilon, "target clamp before the inverse sigmoid");
  cmd->add_option("--seeds", o.seeds, "run seeds")->delimiter(',');
  cmd->add_option("-o,--out", o.out, std::string("output directory (env ") + cifnet::kOutputDirEnv +
                                         " overrides the config file)");
  cmd->add_flag("--disable-buffer", o.disable_buffer, "train without the expansion buffer");
  cmd->add_flag("--disable-oversampling", o.disable_oversampling, "replay the buffer without oversampling");
  cmd->add_flag("--save-classifier", o.save_classifier, "write classifier.bin per seed");
}

cifnet::RunConfig build_config(const Overrides& o) {
  cifnet::RunConfig c = o.config_path.empty() ? cifnet::RunConfig{} : cifnet::load_config(o.config_path);
  if (o.synthetic || o.syn_classes || o.syn_dim || o.syn_per_class || o.syn_separation || o.syn_seed) {
    if (!c.synthetic) c.synthetic = cifnet::SyntheticSpec{};
    c.train_path.clear();
    c.test_path.clear();
  }
  if (c.synthetic) {
    if (o.syn_classes) c.synthetic->num_classes = *o.syn_classes;
    if (o.syn_dim) c.synthetic->dim = *o.syn_dim;
    if (o.syn_per_class) c.synthetic->per_class = *o.syn_per_class;
    if (o.syn_separation) c.synthetic->separation = *o.syn_separation;
    if (o.syn_seed) c.synthetic_seed = *o.syn_seed;
  }
  if (!o.train.empty()) {
    c.synthetic.reset();
    c.synthetic_seed.reset();
    c.train_path = o.train;
  }
  if (!o.test.empty()) c.test_path = o.test;
  if (o.max_classes) c.max_classes = *o.max_classes;
  if (o.increment) c.increment = *o.increment;
  if (o.buffer_per_class) c.buffer_per_class = *o.buffer_per_class;
  if (o.lambda) c.lambda = *o.lambda;
  if (o.clamp_epsilon) c.clamp_epsilon = *o.clamp_epsilon;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.disable_buffer) c.disable_buffer = true;
  if (o.disable_oversampling) c.disable_oversampling = true;
  if (o.save_classifier) c.save_classifier = true;
  if (const char* env = std::getenv(cifnet::kOutputDirEnv); env != nullptr && *env != '\0')
    c.output_dir = env;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

int cmd_train(const Overrides& o) {
  cifnet::RunConfig c = build_config(o);
  const auto reports = cifnet::train_all_seeds(c);
  const fs::path root = c.output_dir;
  for (const auto& r : reports)
    std::cout << "seed " << r.seed << ": tasks=" << r.per_task_accuracy.size()
              << " average_accuracy=" << r.average_accuracy << " final_accuracy=" << r.final_accuracy
              << " buffer_bytes=" << r.buffer_bytes << "  -> " << cifnet::seed_dir(root, r.seed).string()
              << "\n";
  return 0;
}

int cmd_ablate(const Overrides& o) {
  cifnet::RunConfig c = build_config(o);
  const auto rows = cifnet::run_ablation(c);
  const fs::path root = c.output_dir;
  fs::create_directories(root);
  cifnet::write_text(root / "ablation.csv", cifnet::ablation_csv(rows));
  cifnet::write_text(root / "ablation_per_seed.csv", cifnet::ablation_per_seed_csv(rows));
  std::cout << "variant            average_accuracy  final_accuracy\n";
  for (const auto& r : rows) {
    std::string name = r.variant;
    name.resize(19, ' ');
    std::cout << name << std::fixed;
    std::cout.precision(4);
    std::cout << r.mean_average() << "            " << r.mean_final() << "\n";
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const auto result = cifnet::aggregate_reports(paths);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  if (out.empty()) {
    std::cout << result.csv;
  } else {
    cifnet::write_text(out, result.csv);
    std::cout << "wrote " << result.reports_read << " report(s) to " << out << "\n";
  }
  return 0;
}

int cmd_synth(const cifnet::SyntheticSpec& spec, const std::string& train_out, const std::string& test_out) {
  const auto [train, test] = cifnet::generate_synthetic(spec);
  cifnet::save_embeddings(train, train_out, cifnet::format_for_path(train_out));
  cifnet::save_embeddings(test, test_out, cifnet::format_for_path(test_out));
  std::cout << "train: " << train.size() << " records -> " << train_out << "\n"
            << "test: " << test.size() << " records -> " << test_out << "\n";
  return 0;
}

int cmd_inspect(const std::string& path, bool list_classes) {
  const cifnet::EmbeddingHeader h = cifnet::read_embedding_header(path);
  const auto size = fs::file_size(path);
  nlohmann::json j{{"magic", "CEMB"},
                   {"version", h.version},
                   {"dim", h.dim},
                   {"count", h.count},
                   {"label_width", h.label_width},
                   {"file_bytes", size},
                   {"expected_bytes", h.expected_file_bytes()}};
  if (size != h.expected_file_bytes()) {
    std::cout << j.dump(2) << "\n";
    throw cifnet::FormatError("file size " + std::to_string(size) + " does not match expected " +
                              std::to_string(h.expected_file_bytes()) + " bytes");
  }
  if (list_classes) {
    const auto data = cifnet::load_embeddings(path, cifnet::EmbeddingFormat::binary);
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [id, idx] : data.class_index()) counts[std::to_string(id)] = idx.size();
    j["classes"] = counts;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cifnet: closed-form class-incremental learning over fixed embeddings"};
  app.require_subcommand(1);

  Overrides train_opts, ablate_opts;
  auto* train = app.add_subcommand("train", "run the class-incremental loop and write reports");
  add_run_options(train, train_opts);
  auto* ablate = app.add_subcommand("ablate", "compare full / no-oversampling / no-buffer variants");
  add_run_options(ablate, ablate_opts);

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "merge run reports into one CSV");
  report->add_option("dirs", report_dirs, "run directories or report.json files")->required();
  report->add_option("-o,--out", report_out, "CSV path (default: stdout)");

  cifnet::SyntheticSpec synth_spec;
  std::string synth_train, synth_test;
  auto* synth = app.add_subcommand("synth", "generate a Gaussian embedding dataset");
  synth->add_option("--classes", synth_spec.num_classes)->capture_default_str();
  synth->add_option("--dim", synth_spec.dim)->capture_default_str();
  synth->add_option("--per-class", synth_spec.per_class)->capture_default_str();
  synth->add_option("--separation", synth_spec.separation)->capture_default_str();
  synth->add_option("--seed", synth_spec.seed)->capture_default_str();
  synth->add_option("--train-out", synth_train, "training file (.csv or binary)")->required();
  synth->add_option("--test-out", synth_test, "test file (.csv or binary)")->required();

  std::string inspect_path;
  bool inspect_classes = false;
  auto* inspect = app.add_subcommand("inspect", "print and validate a binary embedding header");
  inspect->add_option("file", inspect_path)->required()->check(CLI::ExistingFile);
  inspect->add_flag("--classes", inspect_classes, "also decode the payload and count records per class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("config", kExitConfig, e.what());
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_opts);
    if (*ablate) return cmd_ablate(ablate_opts);
    if (*report) return cmd_report(report_dirs, report_out);
    if (*synth) return cmd_synth(synth_spec, synth_train, synth_test);
    if (*inspect) return cmd_inspect(inspect_path, inspect_classes);
  } catch (const cifnet::Error& e) {
    const int code = exit_code(e.kind());
    report_error(cifnet::to_string(e.kind()), code, e.what());
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error("format", kExitFormat, e.what());
    return kExitFormat;
  } catch (const std::exception& e) {
    report_error("internal", 1, e.what());
    return 1;
  }
  return 0;
}
