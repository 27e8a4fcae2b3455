#pragma once

#include <cmath>
#include <string>

#include "cifnet/error.hpp"

namespace cifnet {

enum class ActivationKind { logistic };

/// Output activation shared by every neuron of a classifier, plus the target
/// clamp used before inverting it. Binary {0,1} targets have infinite logit,
/// so they are mapped to {eps, 1 - eps}.
struct ActivationSpec {
  ActivationKind kind = ActivationKind::logistic;
  double clamp_epsilon = 0.05;

  static ActivationSpec logistic(double eps = 0.05) {
    ActivationSpec spec{ActivationKind::logistic, eps};
    spec.validate();
    return spec;
  }

  void validate() const {
    // 0.5 is accepted: every target collapses onto the symmetry point.
    if (!(clamp_epsilon > 0.0 && clamp_epsilon <= 0.5))
      throw InputError("clamp_epsilon must lie in (0, 0.5], got " + std::to_string(clamp_epsilon));
  }

  double forward(double x) const {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }

  double inverse(double y) const { return std::log(y) - std::log1p(-y); }

  double derivative(double x) const {
    const double e = std::exp(-std::abs(x));
    return e / ((1.0 + e) * (1.0 + e));
  }

  /// Derivative expressed through the output value, y (1 - y).
  double derivative_from_output(double y) const { return y * (1.0 - y); }

  bool operator==(const ActivationSpec&) const = default;
};

inline std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::logistic: return "logistic";
  }
  return "unknown";
}

}  // namespace cifnet
