#include "evmcv/variance.hpp"

#include "evmcv/kernels.hpp"

#include <cmath>
#include <limits>

namespace evmcv {

double empirical_variance(std::span<const double> values) { return kernels::empirical_variance(values); }

std::vector<double> reduced_values(const Integrand& f, const CvFamily& family, std::span<const double> a,
                                   const Dataset& data) {
  const auto pinned = family.admissible(a);
  const ScoredSample scored = kernels::score_sample(family.density(), data);
  const auto fv = kernels::integrand_values(f, data);
  std::vector<double> out(data.size());
  kernels::reduced_values(fv, family, pinned, scored, out);
  return out;
}

void CostModel::validate() const {
  if (cost_f < 1 || cost_cv < 1) throw std::invalid_argument("cost units must be at least 1");
}

Efficiency efficiency(double svar, double svar_method, const CostModel& cost) {
  cost.validate();
  if (svar_method < 0.0 || std::isnan(svar_method)) {
    throw std::invalid_argument("reduced variance must be non-negative");
  }
  if (svar_method == 0.0) return {std::numeric_limits<double>::infinity(), true};
  const double cf = cost.cost_f;
  return {svar * cf / (svar_method * (cf + cost.cost_cv)), false};
}

VarianceReport make_variance_report(double svar, double svar_evm, std::optional<double> svar_ls,
                                    const CostModel& cost) {
  VarianceReport r;
  r.svar = svar;
  r.svar_evm = svar_evm;
  r.svar_ls = svar_ls;
  r.eff_evm = efficiency(svar, svar_evm, cost);
  if (svar_ls) r.eff_ls = efficiency(svar, *svar_ls, cost);
  r.ratio = svar_evm == 0.0 ? std::numeric_limits<double>::infinity() : svar / svar_evm;
  return r;
}

}  // namespace evmcv
