#pragma once

// Closed-form learning of a single sigmoid output neuron.
//
// A neuron's knowledge is the triple (M, U, S): the moment vector
// M = X (f' .* f' .* d) and the economy SVD factors of X diag(f'), where X is
// the bias-augmented input, d the inverse-activated targets and f' the
// activation derivative at those targets. Two triples combine exactly:
// M adds, and (U, S) is re-derived from the SVD of [U_a S_a | U_b S_b].
// Weights follow as w = U (S^2 + lambda I)^-1 U^T M.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include <Eigen/SVD>

#include "cifnet/activation.hpp"
#include "cifnet/error.hpp"
#include "cifnet/types.hpp"

namespace cifnet {

/// Singular values below this fraction of the largest one are dropped after
/// every factorization.
inline constexpr double kRankTolerance = 1e-10;

struct NeuronKnowledge {
  Vector moment;            // length D+1
  Matrix basis;             // (D+1) x r, orthonormal columns
  Vector singular_values;   // length r, descending
  std::uint64_t sample_count = 0;

  static NeuronKnowledge empty(Eigen::Index augmented_dim) {
    NeuronKnowledge k;
    k.moment = Vector::Zero(augmented_dim);
    k.basis = Matrix(augmented_dim, 0);
    k.singular_values = Vector(0);
    return k;
  }

  bool is_empty() const { return sample_count == 0 && singular_values.size() == 0; }
  Eigen::Index augmented_dim() const { return moment.size(); }
  Eigen::Index rank() const { return singular_values.size(); }
};

/// Left factor and singular values of a (weighted) batch matrix.
struct Factorization {
  Matrix basis;
  Vector singular_values;
};

struct EncodedTargets {
  Vector target;      // clamped y
  Vector pre_target;  // f^-1(y)
  Vector slope;       // f'(y)
};

/// Prepends a row of ones to a D x n batch.
inline Matrix augment_bias(const Eigen::Ref<const Matrix>& x) {
  Matrix out(x.rows() + 1, x.cols());
  out.row(0).setOnes();
  out.bottomRows(x.rows()) = x;
  return out;
}

/// One-vs-rest targets for `target_class`, clamped and pushed through the
/// inverse activation.
inline EncodedTargets encode_targets(std::span<const ClassId> labels, ClassId target_class,
                                     const ActivationSpec& activation) {
  activation.validate();
  const double eps = activation.clamp_epsilon;
  const auto n = static_cast<Eigen::Index>(labels.size());
  // y(1-y) is the same at both clamped targets; evaluating it once keeps the
  // slope vectors bit-identical across neurons.
  const double slope = activation.derivative_from_output(eps);
  EncodedTargets enc{Vector(n), Vector(n), Vector(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const double y = labels[static_cast<std::size_t>(j)] == target_class ? 1.0 - eps : eps;
    enc.target[j] = y;
    enc.pre_target[j] = activation.inverse(y);
    enc.slope[j] = slope;
  }
  return enc;
}

/// Economy SVD keeping only the numerically nonzero part of the spectrum.
inline Factorization economy_svd(const Eigen::Ref<const Matrix>& a) {
  if (!a.allFinite()) throw NumericalError("economy_svd: input contains non-finite values");
  Factorization f;
  if (a.cols() == 0 || a.rows() == 0) {
    f.basis = Matrix(a.rows(), 0);
    f.singular_values = Vector(0);
    return f;
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  const Matrix& u = svd.matrixU();
  if (!s.allFinite() || !u.allFinite())
    throw NumericalError("economy_svd: decomposition did not converge");

  const double cutoff = s.size() > 0 ? s[0] * kRankTolerance : 0.0;
  Eigen::Index r = 0;
  while (r < s.size() && s[r] > cutoff && s[r] > 0.0) ++r;
  f.basis = u.leftCols(r);
  f.singular_values = s.head(r);
  return f;
}

/// Factor of X diag(f').
inline Factorization factor_weighted_batch(const Eigen::Ref<const Matrix>& x_aug,
                                           const Eigen::Ref<const Vector>& slope) {
  if (x_aug.cols() != slope.size())
    throw InputError("factor_weighted_batch: " + std::to_string(x_aug.cols()) + " samples but " +
                     std::to_string(slope.size()) + " slopes");
  return economy_svd(x_aug * slope.asDiagonal());
}

/// M_p = X (f' .* f' .* d).
inline Vector batch_moment(const Eigen::Ref<const Matrix>& x_aug,
                           const Eigen::Ref<const Vector>& pre_target,
                           const Eigen::Ref<const Vector>& slope) {
  if (x_aug.cols() != pre_target.size() || x_aug.cols() != slope.size())
    throw InputError("batch_moment: column count does not match target length");
  return x_aug * slope.cwiseProduct(slope).cwiseProduct(pre_target);
}

/// Combines two knowledge triples of the same neuron learned on disjoint data.
inline NeuronKnowledge merge_knowledge(const NeuronKnowledge& a, const NeuronKnowledge& b) {
  if (a.augmented_dim() != b.augmented_dim())
    throw InputError("merge_knowledge: augmented dimension " + std::to_string(a.augmented_dim()) +
                     " vs " + std::to_string(b.augmented_dim()));
  if (b.is_empty()) return a;
  if (a.is_empty()) return b;

  NeuronKnowledge out;
  out.moment = a.moment + b.moment;
  out.sample_count = a.sample_count + b.sample_count;

  Matrix stacked(a.augmented_dim(), a.rank() + b.rank());
  stacked.leftCols(a.rank()) = a.basis * a.singular_values.asDiagonal();
  stacked.rightCols(b.rank()) = b.basis * b.singular_values.asDiagonal();
  Factorization f = economy_svd(stacked);
  out.basis = std::move(f.basis);
  out.singular_values = std::move(f.singular_values);
  return out;
}

/// Knowledge of a neuron that has seen only this batch.
inline NeuronKnowledge batch_knowledge(const Eigen::Ref<const Matrix>& x_aug,
                                       const Eigen::Ref<const Vector>& pre_target,
                                       const Eigen::Ref<const Vector>& slope) {
  NeuronKnowledge k;
  k.moment = batch_moment(x_aug, pre_target, slope);
  Factorization f = factor_weighted_batch(x_aug, slope);
  k.basis = std::move(f.basis);
  k.singular_values = std::move(f.singular_values);
  k.sample_count = static_cast<std::uint64_t>(x_aug.cols());
  return k;
}

/// Absorbs one batch into a neuron's knowledge.
inline NeuronKnowledge train_neuron(const NeuronKnowledge& knowledge,
                                    const Eigen::Ref<const Matrix>& x_aug,
                                    const Eigen::Ref<const Vector>& pre_target,
                                    const Eigen::Ref<const Vector>& slope) {
  if (x_aug.rows() != knowledge.augmented_dim())
    throw InputError("train_neuron: batch has " + std::to_string(x_aug.rows()) +
                     " rows, knowledge expects " + std::to_string(knowledge.augmented_dim()));
  if ((slope.array() <= 0.0).any())
    throw InputError("train_neuron: activation slopes must be positive");
  if (x_aug.cols() == 0) return knowledge;
  return merge_knowledge(knowledge, batch_knowledge(x_aug, pre_target, slope));
}

/// w = U (S^2 + lambda)^-1 U^T M, using the diagonal reciprocal.
inline Vector solve_weights(const NeuronKnowledge& knowledge, double lambda) {
  if (!(lambda > 0.0)) throw InputError("solve_weights: lambda must be positive");
  if (knowledge.is_empty()) throw StateError("solve_weights: neuron has no knowledge");
  const Vector projected = knowledge.basis.transpose() * knowledge.moment;
  const Vector denom = knowledge.singular_values.array().square() + lambda;
  return knowledge.basis * projected.cwiseQuotient(denom);
}

}  // namespace cifnet
