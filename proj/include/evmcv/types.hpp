#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace evmcv {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ConstPoint = std::span<const double>;

/// A point was handed to a density or control variate outside its support.
class OutOfSupport : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A fit could not be produced (singular system, non-finite start, ...).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or file-format problem; carries a human-readable location.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace evmcv
