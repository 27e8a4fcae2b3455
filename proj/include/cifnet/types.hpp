#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace cifnet {

using ClassId = std::uint32_t;

// Samples are stored as columns: a batch of n embeddings of width D is D x n.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace cifnet
