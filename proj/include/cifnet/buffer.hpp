#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cifnet/dataset.hpp"
#include "cifnet/error.hpp"

namespace cifnet {

/// Per-class store of past embeddings, filled by uniform random sampling at
/// the end of each task. Stored entries are never refreshed or evicted.
class ExpansionBuffer {
 public:
  ExpansionBuffer(std::size_t dim, std::size_t capacity_per_class, std::uint64_t seed)
      : dim_(dim), capacity_(capacity_per_class), seed_(seed), rng_(seed) {}

  std::size_t dim() const { return dim_; }
  std::size_t capacity_per_class() const { return capacity_; }
  std::uint64_t seed() const { return seed_; }
  const std::map<ClassId, EmbeddingDataset>& per_class() const { return per_class_; }
  bool empty() const { return total_vectors() == 0; }

  std::size_t class_size(ClassId id) const {
    auto it = per_class_.find(id);
    return it == per_class_.end() ? 0 : it->second.size();
  }

  std::size_t total_vectors() const {
    std::size_t n = 0;
    for (const auto& [_, d] : per_class_) n += d.size();
    return n;
  }

  /// Storage for the float32 payload.
  std::uint64_t bytes() const { return std::uint64_t{total_vectors()} * dim_ * sizeof(float); }

  /// Draws min(m_b, available) embeddings of every class in `task` without
  /// replacement. Classes already buffered are rejected.
  void update(const EmbeddingDataset& task) {
    if (!task.empty() && task.dim() != dim_)
      throw InputError("buffer update: dataset dim " + std::to_string(task.dim()) +
                       " differs from buffer dim " + std::to_string(dim_));
    for (const auto& [id, _] : task.class_index())
      if (per_class_.contains(id))
        throw InputError("buffer update: class " + std::to_string(id) + " already buffered");
    if (capacity_ == 0) return;

    for (const auto& [id, indices] : task.class_index()) {
      std::vector<std::size_t> picked;
      picked.reserve(std::min(capacity_, indices.size()));
      std::sample(indices.begin(), indices.end(), std::back_inserter(picked), capacity_, rng_);
      EmbeddingDataset stored(dim_);
      stored.reserve(picked.size());
      for (std::size_t i : picked) stored.add(task.embedding(i), id);
      per_class_.emplace(id, std::move(stored));
    }
  }

 private:
  std::size_t dim_;
  std::size_t capacity_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::map<ClassId, EmbeddingDataset> per_class_;
};

struct ReplaySet {
  EmbeddingDataset data;
  std::map<ClassId, std::size_t> replication;  // r_c per buffered class
};

/// r_c = floor(n_max / n_c'), clamped to at least one copy so a buffered class
/// larger than every current class is still replayed.
inline std::size_t replication_factor(std::size_t n_max, std::size_t n_stored) {
  if (n_stored == 0) return 0;
  return std::max<std::size_t>(1, n_max / n_stored);
}

/// Replicates every buffered class so it roughly matches the largest class of
/// the current task. With `oversample` off each class is replayed once.
inline ReplaySet oversample_buffer(const EmbeddingDataset& task, const ExpansionBuffer& buffer,
                                   bool oversample = true) {
  if (task.empty()) throw InputError("oversample_buffer: task data is empty");
  std::size_t n_max = 0;
  for (const auto& [_, idx] : task.class_index()) n_max = std::max(n_max, idx.size());

  ReplaySet replay{EmbeddingDataset(buffer.dim()), {}};
  for (const auto& [id, stored] : buffer.per_class()) {
    if (stored.empty()) continue;
    const std::size_t r = oversample ? replication_factor(n_max, stored.size()) : 1;
    replay.replication[id] = r;
    for (std::size_t k = 0; k < r; ++k) replay.data.append(stored);
  }
  return replay;
}

}  // namespace cifnet
