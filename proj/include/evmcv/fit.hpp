#pragma once

#include "evmcv/kernels.hpp"
#include "evmcv/nelder_mead.hpp"
#include "evmcv/stein_cv.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace evmcv {

enum class FitMethod { EvmLinear, EvmNonlinear, LsLinear };

std::string_view to_string(FitMethod method) noexcept;

struct FitResult {
  std::vector<double> a_hat;
  /// V_n(f - zeta) on the training data for EVM; sum of squared residuals for LS.
  double objective = 0.0;
  FitMethod method = FitMethod::EvmLinear;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> start_point;
  bool ridge_used = false;
};

struct SearchOptions {
  std::size_t max_iterations = 2000;
  double tolerance = 1e-9;
  /// Number of simplex initializations; each restart begins at the previous best point.
  std::size_t restarts = 1;
  double initial_step = 0.1;
  /// Per-parameter bounds; when absent, nonlinear fits use [-default_box, default_box].
  std::optional<std::vector<std::pair<double, double>>> parameter_box;
  double default_box = 10.0;
};

/// a -> V_n(f - zeta_a) on a fixed dataset. f values and scores are computed once.
class EvmObjective {
 public:
  EvmObjective(const Integrand& f, const CvFamily& family, const Dataset& data);

  double operator()(std::span<const double> a) const;
  /// Same as operator() but a is taken verbatim (already admissible).
  double evaluate_admissible(std::span<const double> a) const;

  const CvFamily& family() const noexcept { return *family_; }
  const ScoredSample& sample() const noexcept { return sample_; }
  std::span<const double> f_values() const noexcept { return f_values_; }

 private:
  const CvFamily* family_;
  ScoredSample sample_;
  std::vector<double> f_values_;
};

/// V_n(f - zeta_a) over data.
double objective(const Integrand& f, const CvFamily& family, std::span<const double> a, const Dataset& data);

/// Closed-form EVM for a linear family: solves the sample-covariance normal
/// equations over the unmasked parameters, with a one-time ridge fallback.
FitResult evm_fit_linear(const Integrand& f, const CvFamily& family, const Dataset& data);

/// Least squares sum_i (f(X_i) - zeta_a(X_i))^2 over the unmasked parameters (no intercept).
FitResult ls_fit_linear(const Integrand& f, const CvFamily& family, const Dataset& data);

/// Nelder-Mead on a -> V_n(f - zeta_a), restricted to unmasked parameters and the box.
FitResult evm_fit_nonlinear(const Integrand& f, const CvFamily& family, const Dataset& data,
                            std::span<const double> start, const SearchOptions& opts);
FitResult evm_fit_nonlinear(const EvmObjective& objective, std::span<const double> start,
                            const SearchOptions& opts);

/// Central differences of V_n per unmasked coordinate; masked coordinates report 0.
std::vector<double> finite_difference_gradient(const Integrand& f, const CvFamily& family,
                                               std::span<const double> a, const Dataset& data, double step);

/// Analytic gradient 2(C a - c) of V_n for a linear family (C, c: sample covariances).
std::vector<double> linear_objective_gradient(const Integrand& f, const CvFamily& family,
                                              std::span<const double> a, const Dataset& data);

/// Start point for a d-asset basket family: each asset's 1-D problem
/// (f_1d[i] against column i of data) is fitted from a small grid of starts
/// and the per-asset optima are stacked. Falls back to zeros for an asset
/// whose fits all fail.
std::vector<double> basket_start_point(std::span<const Integrand> f_1d, const BasketExpFamily& family,
                                       const Dataset& data, const SearchOptions& opts);

/// Sample covariance (1/(n-1)) of the rows of data.
Matrix sample_covariance(const Dataset& data);

}  // namespace evmcv
