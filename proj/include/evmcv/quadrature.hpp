#pragma once

#include <cstddef>
#include <functional>

namespace evmcv {

struct SimpsonResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

/// Adaptive Simpson on [a, b]. A panel is accepted when
/// |S_left + S_right - S| <= 15 max(abs_tol, rel_tol |S_left + S_right|);
/// the absolute budget is split in half at every bisection.
/// Panels that reach max_depth are accepted and flagged as unconverged.
SimpsonResult adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double abs_tol,
                               double rel_tol = 0.0, int max_depth = 48);

/// Fixed 10-point Gauss-Legendre rule on [a, b].
double gauss_legendre10(const std::function<double(double)>& fn, double a, double b);

}  // namespace evmcv
