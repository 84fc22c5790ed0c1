#include "evmcv/oracle.hpp"

#include "evmcv/quadrature.hpp"
#include "evmcv/variance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace evmcv {

Interval default_window(const Density& density) {
  if (density.dim() != 1) throw std::invalid_argument("default_window: density must be 1-D");
  switch (density.kind()) {
    case DensityKind::StdNormal:
      return {-10.0, 10.0};
    case DensityKind::Exponential:
      return {kPositiveSupportFloor, 50.0};
    case DensityKind::LogNormal: {
      const auto& ln = static_cast<const LogNormalGbm&>(density);
      return {kPositiveSupportFloor,
              ln.x0() * std::exp(ln.mu() * ln.t() + 10.0 * ln.sigma() * std::sqrt(ln.t()))};
    }
    case DensityKind::Mvn: {
      const auto& g = static_cast<const MultivariateNormal&>(density);
      const double sd = std::sqrt(g.covariance().matrix(0, 0));
      return {-10.0 * sd, 10.0 * sd};
    }
    case DensityKind::Product:
      return default_window(*static_cast<const ProductDensity&>(density).components().front());
  }
  throw std::invalid_argument("default_window: unknown density");
}

ZeroVariancePhi::ZeroVariancePhi(std::function<double(double)> f, DensityPtr density, const QuadratureSpec& quad)
    : f_(std::move(f)), density_(std::move(density)) {
  if (!density_ || density_->dim() != 1) throw std::invalid_argument("zero_variance_phi_1d: density must be 1-D");
  if (!(quad.abs_tol > 0.0)) throw std::invalid_argument("zero_variance_phi_1d: tolerance must be positive");
  if (quad.grid_nodes < 2) throw std::invalid_argument("zero_variance_phi_1d: need at least two grid nodes");
  window_ = quad.window.value_or(default_window(*density_));
  const Interval supp = density_->support(0);
  if (!(window_.lo < window_.hi) || window_.lo < supp.lo || window_.hi > supp.hi) {
    throw std::invalid_argument("zero_variance_phi_1d: window must be a non-empty subset of the support");
  }

  const std::size_t m = quad.grid_nodes;
  nodes_.resize(m);
  const bool geometric = density_->kind() == DensityKind::LogNormal && window_.lo > 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(m - 1);
    nodes_[k] = geometric ? window_.lo * std::pow(window_.hi / window_.lo, t)
                          : window_.lo + t * (window_.hi - window_.lo);
  }
  nodes_.front() = window_.lo;
  nodes_.back() = window_.hi;

  log_ref_ = -std::numeric_limits<double>::infinity();
  for (double x : nodes_) {
    const double p = x;
    log_ref_ = std::max(log_ref_, density_->log_density_unchecked({&p, 1}));
  }

  const double width = window_.hi - window_.lo;
  const auto segment_tol = [&](std::size_t k) { return quad.abs_tol * (nodes_[k + 1] - nodes_[k]) / width; };
  const auto integrate = [&](const std::function<double(double)>& g, std::size_t k) {
    const auto r = adaptive_simpson(g, nodes_[k], nodes_[k + 1], segment_tol(k), quad.segment_rel_tol,
                                    quad.max_depth);
    converged_ = converged_ && r.converged;
    return r.value;
  };

  // First pass: mass and first moment, which fix E.
  std::vector<double> mass(m - 1), moment(m - 1);
  const std::function<double(double)> w = [this](double x) { return weight(x); };
  const std::function<double(double)> wf = [this](double x) { return weight(x) * f_(x); };
  for (std::size_t k = 0; k + 1 < m; ++k) {
    mass[k] = integrate(w, k);
    moment[k] = integrate(wf, k);
  }
  double mass_sum = 0.0, moment_sum = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    mass_sum += mass[k];
    moment_sum += moment[k];
  }
  total_mass_ = mass_sum;
  expectation_ = moment_sum / mass_sum;

  // Second pass integrates pi (f - E) directly so the tails keep their relative accuracy.
  std::vector<double> centered(m - 1);
  const std::function<double(double)> wc = [this](double x) { return weight(x) * (f_(x) - expectation_); };
  for (std::size_t k = 0; k + 1 < m; ++k) centered[k] = integrate(wc, k);

  from_left_.assign(m, 0.0);
  mass_left_.assign(m, 0.0);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    from_left_[k + 1] = from_left_[k] + centered[k];
    mass_left_[k + 1] = mass_left_[k] + mass[k];
  }
  from_right_.assign(m, 0.0);
  for (std::size_t k = m - 1; k > 0; --k) from_right_[k - 1] = from_right_[k] + centered[k - 1];

  left_flux_ = -from_right_.front() / total_mass_;
  right_flux_ = from_left_.back() / total_mass_;
}

double ZeroVariancePhi::weight(double x) const {
  return std::exp(density_->log_density_unchecked({&x, 1}) - log_ref_);
}

double ZeroVariancePhi::operator()(double x) const {
  if (!(x >= window_.lo && x <= window_.hi)) throw OutOfSupport("phi*: point outside the quadrature window");
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  std::size_t k = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
  if (k + 1 >= nodes_.size()) k = nodes_.size() - 2;

  const std::function<double(double)> wc = [this](double t) { return weight(t) * (f_(t) - expectation_); };
  const double frac = (x - nodes_[k]) / (nodes_[k + 1] - nodes_[k]);
  const double mass_at_x = mass_left_[k] + frac * (mass_left_[k + 1] - mass_left_[k]);
  double integral;
  if (mass_at_x <= 0.5 * total_mass_) {
    integral = from_left_[k] + gauss_legendre10(wc, nodes_[k], x);
  } else {
    integral = -(from_right_[k + 1] + gauss_legendre10(wc, x, nodes_[k + 1]));
  }
  return integral / weight(x);
}

ZeroVariancePhi zero_variance_phi_1d(std::function<double(double)> f, DensityPtr density,
                                     const QuadratureSpec& quad) {
  return ZeroVariancePhi(std::move(f), std::move(density), quad);
}

double verify_zero_variance(const std::function<double(double)>& f, const Density& density,
                            const std::function<double(double)>& phi, double expectation,
                            const std::vector<double>& grid, double step) {
  if (density.dim() != 1) throw std::invalid_argument("verify_zero_variance: density must be 1-D");
  double worst = 0.0;
  for (double x : grid) {
    const double derivative = (phi(x + step) - phi(x - step)) / (2.0 * step);
    const double s = density.score(ConstPoint{&x, 1})[0];
    const double zeta = derivative + phi(x) * s;
    const double residual = std::abs(f(x) - zeta - expectation);
    worst = std::isnan(residual) ? residual : std::max(worst, residual);
    if (std::isnan(worst)) break;
  }
  return worst;
}

HermiteCheck hermite_expectation_check(int k, std::size_t n, std::uint64_t seed) {
  if (k != 1 && k != 2) throw std::invalid_argument("hermite_expectation_check: k must be 1 or 2");
  if (n < 2) throw std::invalid_argument("hermite_expectation_check: n must be at least 2");
  const auto density = std_normal(1);
  const Dataset data = density->sample(n, seed);
  std::vector<double> h(n);
  double second = 0.0;
  const double factorial = k == 1 ? 1.0 : 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ConstPoint x = data.row(i);
    h[i] = k == 1 ? -density->score(x)[0] : density->second_ratio(0, 0, x);
    second += h[i] * h[i] / factorial;
  }
  HermiteCheck out;
  double sum = 0.0;
  for (double v : h) sum += v;
  out.mean = sum / static_cast<double>(n);
  out.std_error = std::sqrt(empirical_variance(h) / static_cast<double>(n));
  out.normalized_second_moment = second / static_cast<double>(n);
  out.passed = std::abs(out.mean) <= 4.0 * out.std_error;
  return out;
}

LowerBoundResult lower_bound_scenario(std::size_t n, std::size_t trials, std::uint64_t seed,
                                      std::optional<double> eps) {
  if (n < 2) throw std::invalid_argument("lower_bound_scenario: n must exceed 1");
  if (trials < 100) throw std::invalid_argument("lower_bound_scenario: need at least 100 trials");
  const double bound = 1.0 / (2.0 * static_cast<double>(n));
  const double e = eps.value_or(0.5 * bound);
  if (!(e > 0.0 && e < 0.25)) throw std::invalid_argument("lower_bound_scenario: eps must lie in (0, 1/4)");

  const std::array<double, 2> true_variance = {0.0, 2.0 * e};  // Var g0, Var g1
  Rng rng(derive_seed(seed, "lower_bound"));
  std::vector<double> g1(n);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.uniform();
      g1[i] = u < e ? 1.0 : (u < 2.0 * e ? -1.0 : 0.0);
    }
    // g0 has empirical variance 0, so g1 is chosen exactly when it ties.
    const std::size_t chosen = empirical_variance(g1) <= 0.0 ? 1 : 0;
    if (true_variance[chosen] >= bound) ++hits;
  }
  LowerBoundResult out;
  out.eps = e;
  out.frequency = static_cast<double>(hits) / static_cast<double>(trials);
  out.std_error = std::sqrt(out.frequency * (1.0 - out.frequency) / static_cast<double>(trials));
  out.miss_probability = std::pow(1.0 - 2.0 * e, static_cast<double>(n));
  return out;
}

}  // namespace evmcv
