#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cifnet/error.hpp"
#include "cifnet/types.hpp"

namespace cifnet {

/// Labeled embeddings of a fixed width, stored as contiguous float32 rows.
class EmbeddingDataset {
 public:
  EmbeddingDataset() = default;
  explicit EmbeddingDataset(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  const std::vector<float>& values() const { return values_; }
  const std::vector<ClassId>& labels() const { return labels_; }
  ClassId label(std::size_t i) const { return labels_[i]; }

  std::span<const float> embedding(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

  const std::map<ClassId, std::vector<std::size_t>>& class_index() const { return class_index_; }

  std::vector<ClassId> classes() const {
    std::vector<ClassId> ids;
    for (const auto& [id, _] : class_index_) ids.push_back(id);
    return ids;
  }

  std::size_t class_size(ClassId id) const {
    auto it = class_index_.find(id);
    return it == class_index_.end() ? 0 : it->second.size();
  }

  void reserve(std::size_t n) {
    values_.reserve(n * dim_);
    labels_.reserve(n);
  }

  void add(std::span<const float> embedding, ClassId label) {
    if (embedding.size() != dim_)
      throw InputError("dataset: embedding of length " + std::to_string(embedding.size()) +
                       " added to dataset of dim " + std::to_string(dim_));
    values_.insert(values_.end(), embedding.begin(), embedding.end());
    class_index_[label].push_back(labels_.size());
    labels_.push_back(label);
  }

  void append(const EmbeddingDataset& other) {
    if (other.empty()) return;
    if (other.dim_ != dim_) throw InputError("dataset: cannot append datasets of different dim");
    reserve(size() + other.size());
    for (std::size_t i = 0; i < other.size(); ++i) add(other.embedding(i), other.label(i));
  }

  /// Embeddings as a D x n float64 matrix, one sample per column.
  Matrix to_matrix() const {
    Matrix x(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t d = 0; d < dim_; ++d)
        x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)) =
            static_cast<double>(values_[i * dim_ + d]);
    return x;
  }

  bool operator==(const EmbeddingDataset& o) const {
    return dim_ == o.dim_ && labels_ == o.labels_ && values_ == o.values_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::vector<ClassId> labels_;
  std::map<ClassId, std::vector<std::size_t>> class_index_;
};

/// Partition of the selected classes into consecutive disjoint groups.
/// Group members are dense ids: the i-th class of the shuffled order gets id i.
struct TaskSplit {
  std::vector<std::vector<ClassId>> groups;
  std::vector<ClassId> class_order;  // original label of dense id i
  std::uint64_t shuffle_seed = 0;

  std::size_t num_tasks() const { return groups.size(); }

  std::optional<ClassId> dense_id(ClassId original) const {
    auto it = std::find(class_order.begin(), class_order.end(), original);
    if (it == class_order.end()) return std::nullopt;
    return static_cast<ClassId>(it - class_order.begin());
  }
};

struct TaskPlan {
  TaskSplit split;
  std::vector<EmbeddingDataset> tasks;
};

/// Keeps records whose class was selected by the split, relabeled to dense ids.
inline EmbeddingDataset remap_to_split(const EmbeddingDataset& data, const TaskSplit& split) {
  std::map<ClassId, ClassId> dense;
  for (std::size_t i = 0; i < split.class_order.size(); ++i)
    dense.emplace(split.class_order[i], static_cast<ClassId>(i));
  EmbeddingDataset out(data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto it = dense.find(data.label(i));
    if (it != dense.end()) out.add(data.embedding(i), it->second);
  }
  return out;
}

/// Shuffles the class list with `seed`, optionally keeps the first
/// `max_classes`, and cuts it into groups of `increment` classes.
inline TaskPlan split_tasks(const EmbeddingDataset& data, std::size_t increment, std::uint64_t seed,
                            std::optional<std::size_t> max_classes = std::nullopt) {
  if (increment == 0) throw InputError("split_tasks: increment must be positive");
  std::vector<ClassId> order = data.classes();
  if (max_classes && *max_classes == 0) throw InputError("split_tasks: max_classes must be positive");
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (max_classes && *max_classes < order.size()) order.resize(*max_classes);
  if (increment > order.size())
    throw InputError("split_tasks: increment " + std::to_string(increment) + " exceeds " +
                     std::to_string(order.size()) + " classes");

  TaskPlan plan;
  plan.split.class_order = order;
  plan.split.shuffle_seed = seed;
  for (std::size_t start = 0; start < order.size(); start += increment) {
    std::vector<ClassId> group;
    for (std::size_t i = start; i < std::min(order.size(), start + increment); ++i)
      group.push_back(static_cast<ClassId>(i));
    plan.split.groups.push_back(std::move(group));
  }

  const EmbeddingDataset relabeled = remap_to_split(data, plan.split);
  plan.tasks.assign(plan.split.groups.size(), EmbeddingDataset(data.dim()));
  for (std::size_t i = 0; i < relabeled.size(); ++i) {
    const std::size_t task = relabeled.label(i) / increment;
    plan.tasks[task].add(relabeled.embedding(i), relabeled.label(i));
  }
  return plan;
}

}  // namespace cifnet
