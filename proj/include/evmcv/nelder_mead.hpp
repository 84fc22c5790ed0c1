#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace evmcv {

struct SimplexOptions {
  std::size_t max_iterations = 2000;
  /// Stop when max_i f(v_i) - f(v_best) falls below this.
  double tolerance = 1e-9;
  /// Initial edge along coordinate k: max(initial_step, relative_step * |x_k|).
  double initial_step = 0.1;
  double relative_step = 0.05;
  /// Optional per-coordinate [lo, hi]; every trial point is clipped into it.
  std::optional<std::vector<std::pair<double, double>>> box;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  /// Best vertex value after each iteration.
  std::vector<double> best_trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Downhill simplex with reflection 1, expansion 2, contraction 0.5, shrink 0.5.
/// Non-finite objective values rank as +infinity. Among equal values the
/// vertex that was ordered first keeps precedence.
SimplexResult nelder_mead(const Objective& objective, std::vector<double> start, const SimplexOptions& opts);

}  // namespace evmcv
