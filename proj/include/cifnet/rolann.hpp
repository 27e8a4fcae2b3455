#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cifnet/activation.hpp"
#include "cifnet/error.hpp"
#include "cifnet/knowledge.hpp"
#include "cifnet/types.hpp"

namespace cifnet {

struct OpCounters {
  std::uint64_t svd_calls = 0;
  std::uint64_t absorbed_samples = 0;
};

struct Prediction {
  Matrix probabilities;         // C x n, rows follow class insertion order
  std::vector<ClassId> labels;  // argmax per column
};

/// Expandable one-layer sigmoid classifier trained in closed form. Each class
/// owns an output neuron; neurons are learned independently and the output
/// order is the order in which classes were added.
class RolannClassifier {
 public:
  struct Neuron {
    ClassId id;
    NeuronKnowledge knowledge;
    Vector weights;  // bias first
  };

  RolannClassifier(Eigen::Index input_dim, double lambda = 0.01,
                   ActivationSpec activation = ActivationSpec{})
      : input_dim_(input_dim), lambda_(lambda), activation_(activation) {
    if (input_dim <= 0) throw InputError("RolannClassifier: input_dim must be positive");
    if (!(lambda > 0.0)) throw InputError("RolannClassifier: lambda must be positive");
    activation_.validate();
  }

  Eigen::Index input_dim() const { return input_dim_; }
  double lambda() const { return lambda_; }
  const ActivationSpec& activation() const { return activation_; }
  std::size_t num_classes() const { return neurons_.size(); }
  const std::vector<Neuron>& neurons() const { return neurons_; }
  const OpCounters& counters() const { return counters_; }

  bool has_class(ClassId id) const { return index_.contains(id); }

  std::vector<ClassId> classes() const {
    std::vector<ClassId> ids;
    ids.reserve(neurons_.size());
    for (const auto& n : neurons_) ids.push_back(n.id);
    return ids;
  }

  const Neuron& neuron(ClassId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw InputError("unknown class id " + std::to_string(id));
    return neurons_[it->second];
  }

  /// Adds an output neuron with no knowledge and zero weights.
  void add_class(ClassId id) {
    if (has_class(id)) throw InputError("class id " + std::to_string(id) + " already present");
    index_.emplace(id, neurons_.size());
    neurons_.push_back({id, NeuronKnowledge::empty(input_dim_ + 1), Vector::Zero(input_dim_ + 1)});
  }

  /// Installs previously learned knowledge for a class, adding the class if needed.
  void set_knowledge(ClassId id, NeuronKnowledge knowledge) {
    if (knowledge.augmented_dim() != input_dim_ + 1)
      throw InputError("set_knowledge: dimension mismatch");
    if (!has_class(id)) add_class(id);
    Neuron& n = neurons_[index_.at(id)];
    n.knowledge = std::move(knowledge);
    n.weights = n.knowledge.is_empty() ? Vector::Zero(input_dim_ + 1)
                                       : solve_weights(n.knowledge, lambda_);
  }

  /// Updates every output neuron with the batch; samples of other classes are
  /// negatives. `x` is D x n.
  void train(const Eigen::Ref<const Matrix>& x, std::span<const ClassId> labels) {
    if (x.cols() != static_cast<Eigen::Index>(labels.size()))
      throw InputError("train: " + std::to_string(x.cols()) + " samples but " +
                       std::to_string(labels.size()) + " labels");
    if (x.cols() == 0) return;
    if (x.rows() != input_dim_)
      throw InputError("train: batch dimension " + std::to_string(x.rows()) +
                       " does not match input_dim " + std::to_string(input_dim_));
    for (ClassId label : labels)
      if (!has_class(label)) throw InputError("train: unknown label " + std::to_string(label));

    const Matrix x_aug = augment_bias(x);

    // The batch factor depends only on the slope vector, which is frequently
    // identical across neurons (symmetric clamping), so it is computed once per
    // distinct slope vector.
    std::vector<std::pair<Vector, Factorization>> factor_cache;
    for (Neuron& n : neurons_) {
      EncodedTargets enc = encode_targets(labels, n.id, activation_);
      const Factorization* factor = nullptr;
      for (const auto& [slope, f] : factor_cache)
        if (slope == enc.slope) factor = &f;
      if (factor == nullptr) {
        factor_cache.emplace_back(enc.slope, factor_weighted_batch(x_aug, enc.slope));
        ++counters_.svd_calls;
        factor = &factor_cache.back().second;
      }
      NeuronKnowledge batch;
      batch.moment = batch_moment(x_aug, enc.pre_target, enc.slope);
      batch.basis = factor->basis;
      batch.singular_values = factor->singular_values;
      batch.sample_count = static_cast<std::uint64_t>(x.cols());

      if (!n.knowledge.is_empty()) ++counters_.svd_calls;
      n.knowledge = merge_knowledge(n.knowledge, batch);
      n.weights = solve_weights(n.knowledge, lambda_);
      counters_.absorbed_samples += batch.sample_count;
    }
  }

  /// Sigmoid outputs for every class and the argmax label per sample. Ties go
  /// to the earliest inserted class.
  Prediction predict(const Eigen::Ref<const Matrix>& x) const {
    if (neurons_.empty()) throw StateError("predict: classifier has no classes");
    if (x.rows() != input_dim_)
      throw InputError("predict: input dimension " + std::to_string(x.rows()) +
                       " does not match input_dim " + std::to_string(input_dim_));
    Matrix w(input_dim_ + 1, static_cast<Eigen::Index>(neurons_.size()));
    for (std::size_t c = 0; c < neurons_.size(); ++c) {
      if (neurons_[c].knowledge.is_empty())
        throw StateError("predict: class " + std::to_string(neurons_[c].id) + " is untrained");
      w.col(static_cast<Eigen::Index>(c)) = neurons_[c].weights;
    }
    Matrix logits = w.transpose().rightCols(input_dim_) * x;
    logits.colwise() += w.row(0).transpose();

    Prediction out;
    out.probabilities = logits.unaryExpr([this](double v) { return activation_.forward(v); });
    out.labels.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < out.probabilities.rows(); ++c)
        if (out.probabilities(c, j) > out.probabilities(best, j)) best = c;
      out.labels[static_cast<std::size_t>(j)] = neurons_[static_cast<std::size_t>(best)].id;
    }
    return out;
  }

  friend RolannClassifier merge_classifiers(const RolannClassifier& a, const RolannClassifier& b);

 private:
  Eigen::Index input_dim_;
  double lambda_;
  ActivationSpec activation_;
  std::vector<Neuron> neurons_;
  std::unordered_map<ClassId, std::size_t> index_;
  OpCounters counters_;
};

/// Combines two classifiers trained on different data streams. Shared classes
/// have their knowledge merged and weights re-solved; the rest are copied,
/// a's classes first.
inline RolannClassifier merge_classifiers(const RolannClassifier& a, const RolannClassifier& b) {
  if (a.input_dim_ != b.input_dim_) throw InputError("merge_classifiers: input_dim differs");
  if (a.lambda_ != b.lambda_) throw InputError("merge_classifiers: lambda differs");
  if (!(a.activation_ == b.activation_)) throw InputError("merge_classifiers: activation differs");

  RolannClassifier out = a;
  for (const auto& nb : b.neurons_) {
    if (!out.has_class(nb.id)) {
      out.index_.emplace(nb.id, out.neurons_.size());
      out.neurons_.push_back(nb);
      continue;
    }
    auto& na = out.neurons_[out.index_.at(nb.id)];
    if (nb.knowledge.is_empty()) continue;
    if (!na.knowledge.is_empty()) ++out.counters_.svd_calls;
    na.knowledge = merge_knowledge(na.knowledge, nb.knowledge);
    na.weights = solve_weights(na.knowledge, out.lambda_);
  }
  out.counters_.svd_calls += b.counters_.svd_calls;
  out.counters_.absorbed_samples += b.counters_.absorbed_samples;
  return out;
}

}  // namespace cifnet
