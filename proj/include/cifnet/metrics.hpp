#pragma once

#include <chrono>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cifnet/buffer.hpp"
#include "cifnet/error.hpp"
#include "cifnet/types.hpp"

namespace cifnet {

/// Top-1 accuracy.
inline double task_accuracy(std::span<const ClassId> predictions, std::span<const ClassId> truth) {
  if (predictions.size() != truth.size())
    throw InputError("task_accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw InputError("task_accuracy: no samples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

inline double average_accuracy(std::span<const double> series) {
  if (series.empty()) throw InputError("average_accuracy: empty series");
  return std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
}

// ---------------------------------------------------------------------------
// Buffer memory accounting. All byte counts are exact integers; MB are decimal.

inline constexpr std::uint64_t kBytesPerMB = 1'000'000;

/// Decimal megabytes rounded half-up to two places, e.g. 4096000 -> "4.10".
inline std::string format_mb(std::uint64_t bytes) {
  const std::uint64_t hundredths = (bytes + kBytesPerMB / 200) / (kBytesPerMB / 100);
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(hundredths / 100) + "." + frac;
}

inline double to_mb(std::uint64_t bytes) {
  return static_cast<double>(bytes) / static_cast<double>(kBytesPerMB);
}

struct RawImageShape {
  std::uint64_t height = 224;
  std::uint64_t width = 224;
  std::uint64_t channels = 3;
  std::uint64_t elements() const { return height * width * channels; }
};

struct MemoryReport {
  std::uint64_t vectors = 0;
  std::uint64_t embedding_bytes = 0;
  std::uint64_t raw_equivalent_bytes = 0;

  /// raw / embedding; zero for an empty buffer.
  double ratio() const {
    return embedding_bytes == 0 ? 0.0
                                : static_cast<double>(raw_equivalent_bytes) /
                                      static_cast<double>(embedding_bytes);
  }
};

inline MemoryReport memory_report(std::uint64_t vectors, std::uint64_t dim, RawImageShape shape,
                                  std::uint64_t raw_dtype_bytes) {
  if (raw_dtype_bytes != 1 && raw_dtype_bytes != 4)
    throw InputError("memory_report: raw dtype must be 1 or 4 bytes");
  return {vectors, vectors * dim * 4, vectors * shape.elements() * raw_dtype_bytes};
}

/// Compares the buffer's embedding storage with holding the same number of raw images.
inline MemoryReport buffer_memory_report(const ExpansionBuffer& buffer, RawImageShape shape,
                                         std::uint64_t raw_dtype_bytes) {
  return memory_report(buffer.total_vectors(), buffer.dim(), shape, raw_dtype_bytes);
}

// ---------------------------------------------------------------------------
// Timing

/// Monotonic stopwatch recording one lap per task.
class TimeTracker {
 public:
  using Clock = std::chrono::steady_clock;

  void start() { started_ = Clock::now(); }

  /// Closes the current lap and returns its length in milliseconds.
  std::int64_t stop() {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started_);
    laps_.push_back(ms.count());
    return ms.count();
  }

  const std::vector<std::int64_t>& laps_ms() const { return laps_; }
  std::int64_t total_ms() const { return std::accumulate(laps_.begin(), laps_.end(), std::int64_t{0}); }

 private:
  Clock::time_point started_ = Clock::now();
  std::vector<std::int64_t> laps_;
};

/// Writes the elapsed time of its scope into `out` on destruction.
class ScopedTimer {
 public:
  explicit ScopedTimer(std::chrono::nanoseconds& out)
      : out_(out), start_(std::chrono::steady_clock::now()) {}
  ~ScopedTimer() { out_ = std::chrono::steady_clock::now() - start_; }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  std::chrono::nanoseconds& out_;
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Run report

struct MetricsReport {
  std::vector<double> per_task_accuracy;
  double average_accuracy = 0.0;
  double final_accuracy = 0.0;
  std::vector<std::int64_t> per_task_wall_ms;
  std::uint64_t buffer_bytes = 0;
  nlohmann::json config_echo = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::size_t> classes_seen;  // cumulative class count after each task
  std::uint64_t svd_calls = 0;
  std::uint64_t absorbed_samples = 0;
  // Mean sigmoid output of task k's neurons on test inputs of earlier tasks, k >= 2.
  std::vector<double> new_neuron_activation_on_past;

  void finalize() {
    average_accuracy = cifnet::average_accuracy(per_task_accuracy);
    final_accuracy = per_task_accuracy.back();
  }
};

/// Deterministic part of the report. Wall-clock timings are serialized
/// separately so that identical runs produce identical documents.
inline nlohmann::json to_json(const MetricsReport& r) {
  return {
      {"seed", r.seed},
      {"per_task_accuracy", r.per_task_accuracy},
      {"average_accuracy", r.average_accuracy},
      {"final_accuracy", r.final_accuracy},
      {"buffer_bytes", r.buffer_bytes},
      {"classes_seen", r.classes_seen},
      {"svd_calls", r.svd_calls},
      {"absorbed_samples", r.absorbed_samples},
      {"new_neuron_activation_on_past", r.new_neuron_activation_on_past},
      {"config_echo", r.config_echo},
  };
}

inline nlohmann::json timing_json(const MetricsReport& r) {
  return {{"per_task_wall_ms", r.per_task_wall_ms},
          {"total_wall_ms", std::accumulate(r.per_task_wall_ms.begin(), r.per_task_wall_ms.end(),
                                            std::int64_t{0})}};
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.per_task_accuracy = j.at("per_task_accuracy").get<std::vector<double>>();
    r.average_accuracy = j.at("average_accuracy").get<double>();
    r.final_accuracy = j.at("final_accuracy").get<double>();
    r.buffer_bytes = j.at("buffer_bytes").get<std::uint64_t>();
    r.seed = j.value("seed", std::uint64_t{0});
    r.config_echo = j.value("config_echo", nlohmann::json::object());
    r.classes_seen = j.value("classes_seen", std::vector<std::size_t>{});
    r.svd_calls = j.value("svd_calls", std::uint64_t{0});
    r.absorbed_samples = j.value("absorbed_samples", std::uint64_t{0});
    r.new_neuron_activation_on_past =
        j.value("new_neuron_activation_on_past", std::vector<double>{});
    if (r.per_task_accuracy.empty()) throw FormatError("report has no per-task accuracy");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

/// task,accuracy,wall_ms with tasks numbered from 1.
inline std::string to_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "task,accuracy,wall_ms\n";
  for (std::size_t k = 0; k < r.per_task_accuracy.size(); ++k) {
    out << (k + 1) << ',' << nlohmann::json(r.per_task_accuracy[k]).dump() << ','
        << (k < r.per_task_wall_ms.size() ? r.per_task_wall_ms[k] : 0) << '\n';
  }
  return out.str();
}

}  // namespace cifnet
