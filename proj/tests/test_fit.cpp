#include "evmcv/fit.hpp"
#include "evmcv/variance.hpp"
#include "evmcv/verify.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace evmcv;

namespace {

const Integrand kSquare{"x2", [](ConstPoint x) { return x[0] * x[0]; }};
const Integrand kExp{"ex", [](ConstPoint x) { return std::exp(x[0]); }};
const Integrand kSumExp{"sumexp", [](ConstPoint x) {
                          double s = 0;
                          for (double v : x) s += std::exp(v);
                          return s;
                        }};

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double pairwise_objective(const Integrand& f, const CvFamily& fam, const std::vector<double>& a,
                          const Dataset& d) {
  std::vector<double> g(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) g[i] = f(d.row(i)) - fam.eval(a, d.row(i));
  double s = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j) s += (g[i] - g[j]) * (g[i] - g[j]);
  return s / static_cast<double>(g.size() * (g.size() - 1));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("objective at a = 0 is the variance of f") {
  const auto fam = poly1d_family(std_normal(1));
  const Dataset d = std_normal(1)->sample(300, 2);
  std::vector<double> fv(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) fv[i] = kExp(d.row(i));
  CHECK(objective(kExp, *fam, std::vector<double>(4, 0.0), d) == empirical_variance(fv));
}

TEST_CASE("objective equals the pairwise oracle") {
  for (const auto& fam : reference_families(4)) {
    CAPTURE(fam->family_id());
    const Dataset d = fam->density().sample(200, 6);
    Rng rng(8);
    const auto a = fam->admissible(random_parameters(*fam, rng));
    const double fast = objective(kSumExp, *fam, a, d);
    CHECK(fast == doctest::Approx(pairwise_objective(kSumExp, *fam, a, d)).epsilon(1e-12));
  }
}

TEST_CASE("exact control variate is recovered") {
  SUBCASE("normal x^2") {
    const auto fam = poly1d_family(std_normal(1));
    const auto fit = evm_fit_linear(kSquare, *fam, std_normal(1)->sample(500, 1));
    CHECK(fit.objective <= 1e-12);
    CHECK(fit.a_hat[1] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(fit.method == FitMethod::EvmLinear);
  }
  SUBCASE("exponential x^2") {
    const auto fam = poly1d_family(exponential_unit());
    const auto fit = evm_fit_linear(kSquare, *fam, exponential_unit()->sample(500, 1));
    CHECK(fit.objective <= 1e-8);
    CHECK(fit.a_hat[0] == 0.0);
    CHECK(fit.a_hat[1] == doctest::Approx(-2.0).epsilon(1e-7));
    CHECK(fit.a_hat[2] == doctest::Approx(-1.0).epsilon(1e-7));
  }
}

TEST_CASE("least squares and EVM recover a planted parameter") {
  const auto fam = additive_poly_family(std_normal(3));
  Rng rng(5);
  const auto truth = random_parameters(*fam, rng);
  const Integrand planted{"planted", [&](ConstPoint x) { return fam->eval(truth, x); }};
  const Integrand shifted{"shifted", [&](ConstPoint x) { return 3.0 + fam->eval(truth, x); }};
  const Dataset d = std_normal(3)->sample(400, 3);
  const auto ls = ls_fit_linear(planted, *fam, d);
  const auto evm = evm_fit_linear(shifted, *fam, d);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    CHECK(ls.a_hat[k] == doctest::Approx(truth[k]).epsilon(1e-8));
    CHECK(evm.a_hat[k] == doctest::Approx(truth[k]).epsilon(1e-8));
  }
  CHECK(ls.method == FitMethod::LsLinear);
}

TEST_CASE("closed-form optimum is stationary and a local minimum") {
  struct Case {
    DensityPtr density;
    CvFamilyPtr family;
    Integrand f;
  };
  const auto n10 = std_normal(10);
  const std::vector<Case> cases = {{std_normal(1), poly1d_family(std_normal(1)), kExp},
                                   {exponential_unit(), poly1d_family(exponential_unit()), kExp},
                                   {n10, additive_poly_family(n10), kSumExp}};
  for (const auto& c : cases) {
    CAPTURE(c.family->family_id());
    const Dataset d = c.density->sample(500, 9);
    const auto fit = evm_fit_linear(c.f, *c.family, d);
    const auto grad = finite_difference_gradient(c.f, *c.family, fit.a_hat, d, 1e-5);
    CHECK(norm(grad) <= 1e-6 * (1 + fit.objective));
    Rng rng(1);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> delta(fit.a_hat.size());
      for (auto& x : delta) x = rng.normal();
      const double scale = 1e-3 / norm(delta);
      std::vector<double> moved(fit.a_hat);
      for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += scale * delta[k];
      CHECK(objective(c.f, *c.family, moved, d) >= fit.objective);
    }
  }
}

TEST_CASE("finite differences match the analytic quadratic gradient") {
  const auto n3 = std_normal(3);
  const auto fam = additive_poly_family(n3);
  const Dataset d = n3->sample(400, 4);
  Rng rng(2);
  const auto a = random_parameters(*fam, rng);
  const auto fd = finite_difference_gradient(kSumExp, *fam, a, d, 1e-4);
  const auto exact = linear_objective_gradient(kSumExp, *fam, a, d);
  REQUIRE(fd.size() == exact.size());
  for (std::size_t k = 0; k < fd.size(); ++k) CHECK(fd[k] == doctest::Approx(exact[k]).epsilon(1e-5));
}

TEST_CASE("gradient at zero is -2 times the sample covariances with the basis") {
  const auto fam = poly1d_family(std_normal(1));
  const Dataset d = std_normal(1)->sample(1000, 3);
  const auto grad = finite_difference_gradient(kExp, *fam, std::vector<double>(4, 0.0), d, 1e-4);
  const std::size_t n = d.size();
  std::vector<double> fv(n);
  for (std::size_t i = 0; i < n; ++i) fv[i] = kExp(d.row(i));
  double fbar = 0;
  for (double v : fv) fbar += v / static_cast<double>(n);
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> eta(n);
    double ebar = 0;
    for (std::size_t i = 0; i < n; ++i) {
      eta[i] = fam->basis(d.row(i))[k];
      ebar += eta[i] / static_cast<double>(n);
    }
    double cov = 0;
    for (std::size_t i = 0; i < n; ++i) cov += (fv[i] - fbar) * (eta[i] - ebar);
    cov /= static_cast<double>(n - 1);
    CHECK(grad[k] == doctest::Approx(-2 * cov).epsilon(1e-6));
  }
}

TEST_CASE("masked coordinates report a zero gradient") {
  const auto fam = poly1d_family(exponential_unit());
  const auto grad = finite_difference_gradient(kExp, *fam, std::vector<double>(4, 0.1),
                                               exponential_unit()->sample(100, 1), 1e-5);
  CHECK(grad[0] == 0.0);
  CHECK(grad[1] != 0.0);
}

TEST_CASE("degenerate basis falls back to the ridge") {
  // Two points cannot determine four coefficients.
  const auto fam = poly1d_family(std_normal(1));
  const auto fit = evm_fit_linear(kExp, *fam, std_normal(1)->sample(2, 1));
  CHECK(fit.ridge_used);
  for (double a : fit.a_hat) CHECK(std::isfinite(a));
  Dataset single;
  single.points = RowMatrix::Constant(1, 1, 0.5);
  CHECK_THROWS_AS(evm_fit_linear(kExp, *fam, single), FitError);
}

TEST_CASE("nonlinear fit improves on its start and is deterministic") {
  const auto pi = mvn(random_covariance(3, 6));
  const auto fam = rotated_poly_family(pi);
  const Dataset d = pi->sample(300, 2);
  const Integrand f{"sumsq", [](ConstPoint x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }};
  std::vector<double> start(fam->param_dim(), 0.0);
  const Matrix cov = sample_covariance(d);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) start[fam->b_offset() + 3 * i + j] = cov(i, j);
  SearchOptions opts;
  opts.max_iterations = 3000;
  const auto a = evm_fit_nonlinear(f, *fam, d, start, opts);
  const auto b = evm_fit_nonlinear(f, *fam, d, start, opts);
  CHECK(a.objective < objective(f, *fam, start, d));
  CHECK(a.a_hat == b.a_hat);
  CHECK(a.objective == b.objective);
  CHECK(a.start_point == start);
  CHECK(a.method == FitMethod::EvmNonlinear);
}

TEST_CASE("nonlinear fit stays inside the parameter box") {
  const auto pi = lognormal_gbm(1.0, 0.5, 1.0, 1.0);
  const auto fam = basket_exp_family(pi, 1);
  const Integrand call{"call", [](ConstPoint x) { return std::max(x[0] - 1.0, 0.0); }};
  SearchOptions opts;
  opts.parameter_box = std::vector<std::pair<double, double>>{{-0.2, 0.2}, {0.0, 1.0}};
  const auto fit = evm_fit_nonlinear(call, *fam, pi->sample(300, 1), std::vector<double>{0.1, 0.5}, opts);
  CHECK(std::abs(fit.a_hat[0]) <= 0.2);
  CHECK(fit.a_hat[1] >= 0.0);
  CHECK(fit.a_hat[1] <= 1.0);
}

TEST_CASE("basket start point") {
  const auto asset = lognormal_gbm(1.0, 0.5, 1.0, 1.0);
  const Integrand call{"call", [](ConstPoint x) { return std::max(x[0] - 1.0, 0.0); }};
  SearchOptions opts;

  SUBCASE("d = 1 is the best 1-D grid fit") {
    const auto fam = basket_exp_family(asset, 1);
    const Dataset d = asset->sample(400, 3);
    const std::vector<Integrand> f1 = {call};
    const auto start = basket_start_point(f1, *fam, d, opts);
    const double at_start = objective(call, *fam, start, d);
    for (double s : {-1.0, -0.5, 0.5, 1.0})
      for (double e : {0.5, 1.0, 2.0}) {
        const auto fit = evm_fit_nonlinear(call, *fam, d, std::vector<double>{s, e}, opts);
        CHECK(at_start <= fit.objective);
      }
    CHECK(at_start < objective(call, *fam, std::vector<double>{0.0, 0.0}, d));
  }
  SUBCASE("identical assets give identical blocks") {
    const auto fam = basket_exp_family(std::vector<DensityPtr>{asset, asset, asset}, 2);
    const Dataset one = asset->sample(300, 4);
    Dataset d;
    d.points.resize(300, 3);
    for (int j = 0; j < 3; ++j) d.points.col(j) = one.points.col(0);
    const std::vector<Integrand> f1(3, call);
    const auto start = basket_start_point(f1, *fam, d, opts);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(start[3 + k] == start[k]);
      CHECK(start[6 + k] == start[k]);
    }
  }
}

TEST_CASE("EVM and LS test variances converge as n_train grows") {
  const auto pi = std_normal(1);
  const auto fam = poly1d_family(pi);
  const Dataset test = pi->sample(100000, derive_seed(99, "test"));
  std::vector<double> fv(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) fv[i] = kExp(test.row(i));
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n : {1000, 10000, 100000}) {
    std::vector<double> gaps;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Dataset train = pi->sample(n, derive_seed(seed, "train"));
      const auto evm = evm_fit_linear(kExp, *fam, train);
      const auto ls = ls_fit_linear(kExp, *fam, train);
      gaps.push_back(std::abs(objective(kExp, *fam, evm.a_hat, test) - objective(kExp, *fam, ls.a_hat, test)));
    }
    const double m = median(gaps);
    CAPTURE(n);
    CHECK(m < previous);
    previous = m;
  }
}
