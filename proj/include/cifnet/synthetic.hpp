#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "cifnet/dataset.hpp"
#include "cifnet/error.hpp"

namespace cifnet {

struct SyntheticSpec {
  std::size_t num_classes = 10;
  std::size_t dim = 16;
  std::size_t per_class = 250;
  double separation = 8.0;  // minimum pairwise distance between class means, in units of sigma
  std::uint64_t seed = 0;
};

/// Class means with pairwise distance >= separation. Up to `dim` classes sit
/// on scaled coordinate axes (all distances exactly `separation`); beyond that
/// random directions are rescaled so the closest pair is `separation` apart.
inline std::vector<std::vector<double>> synthetic_means(const SyntheticSpec& spec,
                                                        std::mt19937_64& rng) {
  std::vector<std::vector<double>> means(spec.num_classes, std::vector<double>(spec.dim, 0.0));
  if (spec.num_classes <= spec.dim) {
    for (std::size_t c = 0; c < spec.num_classes; ++c) means[c][c] = spec.separation / std::sqrt(2.0);
    return means;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& m : means)
    for (auto& v : m) v = normal(rng);
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < means.size(); ++a)
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < spec.dim; ++k) d2 += (means[a][k] - means[b][k]) * (means[a][k] - means[b][k]);
      closest = std::min(closest, std::sqrt(d2));
    }
  const double scale = closest > 0.0 ? spec.separation / closest : 0.0;
  for (auto& m : means)
    for (auto& v : m) v *= scale;
  return means;
}

/// Isotropic unit-variance Gaussian classes. Per class, the first
/// per_class - floor(per_class / 5) draws go to train, the rest to test.
inline std::pair<EmbeddingDataset, EmbeddingDataset> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes == 0 || spec.dim == 0 || spec.per_class == 0)
    throw InputError("generate_synthetic: counts must be positive");
  if (!(spec.separation >= 0.0)) throw InputError("generate_synthetic: separation must be >= 0");

  std::mt19937_64 rng(spec.seed);
  const auto means = synthetic_means(spec, rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t n_test = spec.per_class / 5;
  const std::size_t n_train = spec.per_class - n_test;
  EmbeddingDataset train(spec.dim), test(spec.dim);
  train.reserve(spec.num_classes * n_train);
  test.reserve(spec.num_classes * n_test);
  std::vector<float> row(spec.dim);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      for (std::size_t d = 0; d < spec.dim; ++d)
        row[d] = static_cast<float>(means[c][d] + normal(rng));
      (i < n_train ? train : test).add(row, static_cast<ClassId>(c));
    }
  }
  return {std::move(train), std::move(test)};
}

}  // namespace cifnet
