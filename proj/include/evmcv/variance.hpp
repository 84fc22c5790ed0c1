#pragma once

#include "evmcv/distributions.hpp"
#include "evmcv/stein_cv.hpp"

#include <optional>
#include <span>
#include <vector>

namespace evmcv {

/// Unbiased sample variance in U-statistic form:
/// (1/(n(n-1))) sum_{i<j} (v_i - v_j)^2, computed in O(n).
double empirical_variance(std::span<const double> values);

/// g_i = f(X_i) - zeta_a(X_i) over every row of data.
std::vector<double> reduced_values(const Integrand& f, const CvFamily& family, std::span<const double> a,
                                   const Dataset& data);

/// Evaluation cost of f and of a control variate, in units of one analytic function call.
struct CostModel {
  int cost_f = 1;
  int cost_cv = 2;

  void validate() const;
};

struct Efficiency {
  double value = 0.0;
  /// Set when the reduced variance is exactly zero; value is then +infinity.
  bool infinite = false;
};

/// (svar * cost_f) / (svar_method * (cost_f + cost_cv)).
Efficiency efficiency(double svar, double svar_method, const CostModel& cost);

struct VarianceReport {
  double svar = 0.0;
  double svar_evm = 0.0;
  std::optional<double> svar_ls;
  Efficiency eff_evm;
  std::optional<Efficiency> eff_ls;
  double ratio = 0.0;  // svar / svar_evm
};

VarianceReport make_variance_report(double svar, double svar_evm, std::optional<double> svar_ls,
                                    const CostModel& cost);

}  // namespace evmcv
