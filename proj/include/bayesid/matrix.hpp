#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bayesid {

// Row-major dense storage; every matrix in the library (A, X, Y, C, W and the
// residual cache) uses this layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void require_same_shape(const Matrix& lhs, const Matrix& rhs, const char* what) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(lhs.rows()) + "x" + std::to_string(lhs.cols()) +
                                " vs " + std::to_string(rhs.rows()) + "x" +
                                std::to_string(rhs.cols()) + ")");
  }
}

}  // namespace bayesid
