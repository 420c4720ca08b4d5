#pragma once

#include <Eigen/Dense>

namespace aae {

// Rows are samples. Row-major storage keeps mini-batch gathers contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace aae
