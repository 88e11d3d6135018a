#pragma once

/**
 * @file linalg.hpp
 * @brief Small dense linear algebra on top of Eigen: numerical rank, null vectors and minimum-norm
 *        least squares, all through the singular value decomposition.
 */

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "types.hpp"

namespace stable_slices {

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CColumn = Eigen::VectorXcd;
using RColumn = Eigen::VectorXd;

/// Relative singular-value threshold used for rank and null-space decisions.
inline constexpr double kRankThreshold = 1e-10;

template <typename Matrix>
int numerical_rank(const Matrix& m, double rel = kRankThreshold) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return r;
}

/**
 * Right singular vector of the smallest singular value (the last column of V, padded with the
 * extra columns of a wide matrix). Empty when the matrix has full column rank at the threshold.
 */
template <typename Matrix>
std::optional<Eigen::Matrix<typename Matrix::Scalar, Eigen::Dynamic, 1>> null_vector(const Matrix& m,
                                                                                     double rel = kRankThreshold) {
  using Col = Eigen::Matrix<typename Matrix::Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index cols = m.cols();
  if (cols == 0) return std::nullopt;
  if (m.rows() == 0 || m.norm() == 0.0) {
    Col v = Col::Zero(cols);
    v(cols - 1) = 1.0;
    return v;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  if (r >= cols) return std::nullopt;
  return Col(svd.matrixV().col(cols - 1));
}

/// Minimum-norm least-squares solution of m x = rhs with singular values below rel * s_max dropped.
template <typename Matrix, typename Vector>
Vector min_norm_solve(const Matrix& m, const Vector& rhs, double rel = 1e-12) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rel);
  return svd.solve(rhs);
}

}  // namespace stable_slices
