#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cpf {

using Index = std::ptrdiff_t;

// Row-major so that per-node rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

}  // namespace cpf
