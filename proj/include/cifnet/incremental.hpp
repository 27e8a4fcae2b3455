#pragma once

#include <span>
#include <string>
#include <vector>

#include "cifnet/buffer.hpp"
#include "cifnet/dataset.hpp"
#include "cifnet/error.hpp"
#include "cifnet/rolann.hpp"

namespace cifnet {

/// Adds one empty output neuron per new class. Nothing is added if any id
/// collides with an existing class.
inline void expand_classifier(RolannClassifier& classifier, std::span<const ClassId> new_classes) {
  for (std::size_t i = 0; i < new_classes.size(); ++i) {
    if (classifier.has_class(new_classes[i]))
      throw InputError("expand_classifier: class " + std::to_string(new_classes[i]) +
                       " already present");
    for (std::size_t j = 0; j < i; ++j)
      if (new_classes[j] == new_classes[i])
        throw InputError("expand_classifier: duplicate class " + std::to_string(new_classes[i]));
  }
  for (ClassId id : new_classes) classifier.add_class(id);
}

struct IncrementalOptions {
  bool oversample = true;
};

/// One task of class-incremental training: expand, replay the oversampled
/// buffer alongside the task data, train every neuron, then buffer the task.
inline void incremental_train(const EmbeddingDataset& task, RolannClassifier& classifier,
                              ExpansionBuffer& buffer, const IncrementalOptions& options = {}) {
  if (task.empty()) throw InputError("incremental_train: task data is empty");
  if (task.dim() != static_cast<std::size_t>(classifier.input_dim()))
    throw InputError("incremental_train: task dim " + std::to_string(task.dim()) +
                     " does not match classifier input_dim " +
                     std::to_string(classifier.input_dim()));

  const std::vector<ClassId> new_classes = task.classes();
  expand_classifier(classifier, new_classes);

  ReplaySet replay = oversample_buffer(task, buffer, options.oversample);
  EmbeddingDataset combined = task;
  combined.append(replay.data);

  classifier.train(combined.to_matrix(), combined.labels());
  buffer.update(task);
}

}  // namespace cifnet
