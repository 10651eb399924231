#pragma once

#include <Eigen/Dense>

namespace enlmc {

using Vector = Eigen::VectorXd;

/// Particle positions, one particle per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

}  // namespace enlmc
