#include "evmcv/verify.hpp"

#include "evmcv/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace evmcv {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

// Step for coordinate value v: relative near a finite lower support bound, absolute elsewhere.
double fd_step(double v, const Interval& support) {
  if (std::isfinite(support.lo)) return 1e-5 * std::min(1.0, std::abs(v - support.lo));
  return 1e-5;
}

std::vector<double> grid(double lo, double hi, std::size_t points) {
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

struct OraclePair {
  const char* label;
  DensityPtr density;
  std::function<double(double)> f;
  double lo, hi;
};

std::vector<OraclePair> oracle_pairs() {
  const DensityPtr normal = std_normal(1);
  const DensityPtr expo = exponential_unit();
  return {{"normal x^2", normal, [](double x) { return x * x; }, -4.0, 4.0},
          {"normal e^x", normal, [](double x) { return std::exp(x); }, -4.0, 4.0},
          {"normal cos x", normal, [](double x) { return std::cos(x); }, -4.0, 4.0},
          {"exp x^2", expo, [](double x) { return x * x; }, 0.05, 10.0},
          {"exp cos x", expo, [](double x) { return std::cos(x); }, 0.05, 10.0}};
}

}  // namespace

CheckOutcome score_gradient_check(const Density& density, std::size_t points, std::uint64_t seed, double rel_tol) {
  const Dataset data = density.sample(points, seed);
  const std::size_t d = density.dim();
  double worst = 0.0;
  std::vector<double> x(d);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const ConstPoint p = data.row(r);
    const Vector s = density.score(p);
    for (std::size_t i = 0; i < d; ++i) {
      std::copy(p.begin(), p.end(), x.begin());
      const double h = fd_step(p[i], density.support(i));
      x[i] = p[i] + h;
      const double up = density.log_density(x);
      x[i] = p[i] - h;
      const double down = density.log_density(x);
      const double fd = (up - down) / (2.0 * h);
      const double err = std::abs(fd - s[static_cast<Eigen::Index>(i)]) / (1.0 + std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return {worst <= rel_tol, fmt("max relative error %.2e", worst)};
}

CheckOutcome second_ratio_check(const Density& density, std::size_t points, std::uint64_t seed, double rel_tol) {
  if (!density.has_second_ratio()) return {true, "no second ratio exposed"};
  const Dataset data = density.sample(points, seed);
  const std::size_t d = density.dim();
  double worst = 0.0;
  std::vector<double> x(d);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const ConstPoint p = data.row(r);
    const Vector s = density.score(p);
    for (std::size_t i = 0; i < d; ++i) {
      std::copy(p.begin(), p.end(), x.begin());
      const double h = fd_step(p[i], density.support(i));
      x[i] = p[i] + h;
      const Vector up = density.score(x);
      x[i] = p[i] - h;
      const Vector down = density.score(x);
      for (std::size_t j = 0; j < d; ++j) {
        const auto ij = static_cast<Eigen::Index>(j);
        const double expected = (up[ij] - down[ij]) / (2.0 * h) + s[static_cast<Eigen::Index>(i)] * s[ij];
        const double got = density.second_ratio(i, j, p);
        const double sym = density.second_ratio(j, i, p);
        worst = std::max(worst, std::abs(expected - got) / (1.0 + std::abs(expected)));
        worst = std::max(worst, std::abs(sym - got) / (1.0 + std::abs(got)));
      }
    }
  }
  return {worst <= rel_tol, fmt("max relative error %.2e", worst)};
}

std::vector<double> random_parameters(const CvFamily& family, Rng& rng) {
  std::vector<double> a(family.param_dim());
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  if (const auto* basket = dynamic_cast<const BasketExpFamily*>(&family); basket && basket->variant() == 2) {
    for (std::size_t k = 2; k < a.size(); k += 3) a[k] = -1.0 + 1.1 * (a[k] + 1.0) / 2.0;
  }
  return family.admissible(a);
}

CheckOutcome stein_zero_mean_check(const CvFamily& family, std::size_t trials, std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "parameters"));
  double worst = 0.0;
  std::size_t failures = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto a = random_parameters(family, rng);
    const MeanEstimate m = cv_mean_check(family, a, n, derive_seed(seed, t));
    const double z = m.std_error > 0.0 ? std::abs(m.mean) / m.std_error : (m.mean == 0.0 ? 0.0 : INFINITY);
    worst = std::max(worst, z);
    if (!(z <= 4.0)) ++failures;
  }
  return {failures == 0, fmt("max |mean|/stderr %.2f over %.0f draws", worst, static_cast<double>(trials))};
}

std::vector<CvFamilyPtr> reference_families(std::uint64_t seed) {
  const auto normal10 = std_normal(10);
  const auto exp10 = product_density(std::vector<DensityPtr>(10, exponential_unit()));
  const auto gauss = mvn(random_covariance(10, derive_seed(seed, "covariance")));
  Rng rng(derive_seed(seed, "basket_x0"));
  std::vector<DensityPtr> assets;
  for (int i = 0; i < 10; ++i) assets.push_back(lognormal_gbm(rng.uniform(0.5, 1.5), 0.5, 1.0, 1.0));
  const auto basket = product_density(assets);
  return {poly1d_family(std_normal(1)),       poly1d_family(exponential_unit()),
          additive_poly_family(normal10),     additive_poly_family(exp10),
          gaussian_hermite_family(gauss),     rotated_poly_family(gauss),
          basket_exp_family(basket, 1),       basket_exp_family(basket, 2)};
}

std::vector<Check> oracle_checks() {
  std::vector<Check> checks;

  checks.push_back({"quadrature expectations", [] {
                      struct Case {
                        DensityPtr density;
                        std::function<double(double)> f;
                        double exact;
                      };
                      const std::vector<Case> cases = {
                          {std_normal(1), [](double x) { return x * x; }, 1.0},
                          {std_normal(1), [](double x) { return std::exp(x); }, std::exp(0.5)},
                          {std_normal(1), [](double x) { return std::cos(x); }, std::exp(-0.5)},
                          {exponential_unit(), [](double x) { return x * x; }, 2.0}};
                      double worst = 0.0;
                      for (const auto& c : cases) {
                        worst = std::max(worst, std::abs(zero_variance_phi_1d(c.f, c.density).expectation() - c.exact));
                      }
                      return CheckOutcome{worst <= 1e-8, fmt("max error %.2e", worst)};
                    }});

  checks.push_back({"phi* closed forms", [] {
                      const auto normal = zero_variance_phi_1d([](double x) { return x * x; }, std_normal(1));
                      const auto expo = zero_variance_phi_1d([](double x) { return x * x; }, exponential_unit());
                      double worst = 0.0;
                      for (double x : grid(-4.0, 4.0, 401)) worst = std::max(worst, std::abs(normal(x) + x));
                      for (double x : grid(0.05, 20.0, 400)) {
                        const double exact = -x * x - 2.0 * x;
                        worst = std::max(worst, std::abs(expo(x) - exact) / std::max(1.0, std::abs(exact)));
                      }
                      return CheckOutcome{worst <= 1e-6, fmt("max error %.2e", worst)};
                    }});

  checks.push_back({"phi* of a constant", [] {
                      const auto phi = zero_variance_phi_1d([](double) { return 3.0; }, std_normal(1));
                      double worst = 0.0;
                      for (double x : grid(-4.0, 4.0, 81)) worst = std::max(worst, std::abs(phi(x)));
                      return CheckOutcome{worst <= 1e-8, fmt("max |phi*| %.2e", worst)};
                    }});

  checks.push_back({"zero variance, analytic phi", [] {
                      const auto normal = std_normal(1);
                      const double r = verify_zero_variance([](double x) { return x * x; }, *normal,
                                                            [](double x) { return -x; }, 1.0, grid(-4.0, 4.0, 401));
                      return CheckOutcome{r <= 1e-8, fmt("max residual %.2e", r)};
                    }});

  checks.push_back({"PDE residual, quadrature phi*", [] {
                      double worst = 0.0;
                      for (const auto& p : oracle_pairs()) {
                        const auto phi = zero_variance_phi_1d(p.f, p.density);
                        const double r = verify_zero_variance(
                            p.f, *p.density, [&](double x) { return phi(x); }, phi.expectation(),
                            grid(p.lo, p.hi, 200));
                        worst = std::max(worst, r);
                      }
                      return CheckOutcome{worst <= 1e-5, fmt("max residual %.2e over 5 pairs", worst)};
                    }});

  checks.push_back({"phi* boundary flux", [] {
                      double worst = 0.0;
                      for (const auto& p : oracle_pairs()) {
                        const auto phi = zero_variance_phi_1d(p.f, p.density);
                        worst = std::max({worst, std::abs(phi.left_flux()), std::abs(phi.right_flux())});
                      }
                      return CheckOutcome{worst <= 1e-8, fmt("max |pi phi*| at window ends %.2e", worst)};
                    }});

  for (int k : {1, 2}) {
    checks.push_back({"Hermite H" + std::to_string(k) + " mean and norm", [k] {
                        const HermiteCheck h = hermite_expectation_check(k, 100000, 11 + static_cast<unsigned>(k));
                        const bool ok = h.passed && std::abs(h.normalized_second_moment - 1.0) <= 0.05;
                        return CheckOutcome{ok, fmt("mean/stderr %.2f, E[H^2/k!] %.4f", h.mean / h.std_error,
                                                    h.normalized_second_moment)};
                      }});
  }

  for (std::size_t n : {std::size_t{10}, std::size_t{2}}) {
    checks.push_back({"lower bound simulation n=" + std::to_string(n), [n] {
                        const auto r = lower_bound_scenario(n, 10000, 2024);
                        const double bound = std::pow(1.0 - 1.0 / static_cast<double>(n), static_cast<double>(n - 1));
                        const double se = std::sqrt(bound * (1.0 - bound) / 10000.0);
                        return CheckOutcome{r.frequency >= bound - 4.0 * se,
                                            fmt("frequency %.4f, bound %.4f", r.frequency, bound - 4.0 * se)};
                      }});
  }

  const std::vector<DensityPtr> densities = {
      std_normal(3), exponential_unit(), mvn(random_covariance(4, 99)), lognormal_gbm(1.0, 0.5, 1.0, 1.0),
      product_density({std_normal(1), exponential_unit(), lognormal_gbm(0.8, 0.5, 1.0, 1.0)})};
  for (const auto& d : densities) {
    checks.push_back({"score gradient, " + d->id(), [d] { return score_gradient_check(*d, 100, 5); }});
    checks.push_back({"second ratio, " + d->id(), [d] { return second_ratio_check(*d, 100, 6); }});
  }

  for (const auto& family : reference_families(3)) {
    checks.push_back({"Stein zero mean, " + family->family_id() + " on " + family->density().id(),
                      [family] { return stein_zero_mean_check(*family, 20, 100000, 17); }});
  }
  return checks;
}

int run_checks(const std::vector<Check>& checks, std::ostream& out) {
  std::size_t failed = 0;
  for (const auto& check : checks) {
    CheckOutcome outcome;
    try {
      outcome = check.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    if (!outcome.passed) ++failed;
    out << (outcome.passed ? "PASS  " : "FAIL  ") << check.name << "  (" << outcome.detail << ")\n";
  }
  out << (failed == 0 ? "all " + std::to_string(checks.size()) + " checks passed"
                      : std::to_string(failed) + " of " + std::to_string(checks.size()) + " checks failed")
      << '\n';
  return failed == 0 ? 0 : 2;
}

}  // namespace evmcv
