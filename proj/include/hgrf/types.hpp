// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace hgrf {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Raised for malformed inputs (bad sizes, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical kernel cannot meet its contract. Carries the
/// residual that was achieved so callers can report it.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, double residual = -1.0)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

} // namespace hgrf
