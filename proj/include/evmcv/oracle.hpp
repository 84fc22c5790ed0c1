#pragma once

#include "evmcv/distributions.hpp"
#include "evmcv/stein_cv.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace evmcv {

struct QuadratureSpec {
  double abs_tol = 1e-10;
  /// Relative tolerance applied to each grid segment of the inner integral.
  double segment_rel_tol = 1e-13;
  int max_depth = 48;
  /// Nodes of the monotone grid the inner integral is accumulated on.
  std::size_t grid_nodes = 16384;
  /// Overrides the default truncation window of the density.
  std::optional<Interval> window;
};

/// Finite integration window holding all but a negligible tail of the mass:
/// normal [-10, 10], Exp(1) (1e-12, 50], GBM log-normal (1e-12, x0 e^{mu t + 10 sigma sqrt t}].
Interval default_window(const Density& density);

/// phi*(x) = (1/pi(x)) int_A^x pi(t) (f(t) - E) dt for a 1-D density.
///
/// The integral is accumulated once on a grid over the window (uniform, or
/// geometric for log-normal windows). A query adds the piece between the
/// nearest node and x with a fixed Gauss-Legendre rule. Below the median the
/// integral is taken from the left end; above it, as minus the integral to
/// the right end, so 1/pi(x) multiplies a quantity of comparable size.
class ZeroVariancePhi {
 public:
  ZeroVariancePhi(std::function<double(double)> f, DensityPtr density, const QuadratureSpec& quad);

  double operator()(double x) const;
  double expectation() const noexcept { return expectation_; }
  const Interval& window() const noexcept { return window_; }
  /// pi * phi* at the left and right window ends, computed from the opposite side.
  double left_flux() const noexcept { return left_flux_; }
  double right_flux() const noexcept { return right_flux_; }
  bool converged() const noexcept { return converged_; }

 private:
  double weight(double x) const;  // pi(x) / pi(mode), unnormalized

  std::function<double(double)> f_;
  DensityPtr density_;
  Interval window_;
  double log_ref_ = 0.0;
  double expectation_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> from_left_;   // int_lo^{node} pi (f - E)
  std::vector<double> from_right_;  // int_{node}^hi pi (f - E)
  std::vector<double> mass_left_;   // int_lo^{node} pi
  double total_mass_ = 0.0;
  double left_flux_ = 0.0;
  double right_flux_ = 0.0;
  bool converged_ = true;
};

ZeroVariancePhi zero_variance_phi_1d(std::function<double(double)> f, DensityPtr density,
                                     const QuadratureSpec& quad = {});

/// max over grid of |f(x) - zeta_phi(x) - expectation| with zeta_phi = phi' + phi * score
/// and phi' taken by central differences of width 2 * step.
double verify_zero_variance(const std::function<double(double)>& f, const Density& density,
                            const std::function<double(double)>& phi, double expectation,
                            const std::vector<double>& grid, double step = 1e-5);

struct HermiteCheck {
  double mean = 0.0;
  double std_error = 0.0;
  /// Sample mean of H_k^2 / k!, which is 1 for orthonormal Hermite polynomials.
  double normalized_second_moment = 0.0;
  bool passed = false;  // |mean| <= 4 std_error
};

/// H_1 = -pi'/pi = x and H_2 = pi''/pi = x^2 - 1 over n standard normal draws.
HermiteCheck hermite_expectation_check(int k, std::size_t n, std::uint64_t seed);

struct LowerBoundResult {
  double frequency = 0.0;
  double std_error = 0.0;
  double eps = 0.0;
  /// Probability that a sample of size n misses both light points: (1 - 2 eps)^n.
  double miss_probability = 0.0;
};

/// Three-point space {x1, x2, x3} with P(x1) = P(x2) = eps, candidates g0 = 0 and
/// g1 = 1[x = x1] - 1[x = x2]. Each trial draws n points and lets an empirical
/// variance minimizer choose, breaking ties towards g1. Returns the fraction of
/// trials whose chosen function has variance >= 1/(2n). eps defaults to 1/(4n).
LowerBoundResult lower_bound_scenario(std::size_t n, std::size_t trials, std::uint64_t seed,
                                      std::optional<double> eps = std::nullopt);

}  // namespace evmcv
