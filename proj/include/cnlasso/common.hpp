#pragma once

#include <Eigen/Dense>

namespace cnlasso {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Row-major storage: all hot loops walk coefficient matrices row by row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace cnlasso
