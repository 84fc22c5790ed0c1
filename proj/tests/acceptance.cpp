// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Replicated criteria use seeds 1, 2, ..., k (the built-in default seed is 1).

#include "evmcv/fit.hpp"
#include "evmcv/harness.hpp"
#include "evmcv/oracle.hpp"
#include "evmcv/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace evmcv;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string title;
  double time_limit;  // seconds; 0 means none stated
  std::function<Outcome()> run;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

ExperimentConfig table_row(int table, const std::string& id) {
  for (auto& c : table_configs(table))
    if (c.experiment_id == id) return c;
  throw std::runtime_error("no table row " + id);
}

double median(std::vector<double> v) { return quartiles(std::move(v)).median; }

std::vector<ExperimentReport> seeds(ExperimentConfig c, std::size_t k) {
  std::vector<ExperimentReport> out;
  for (std::size_t i = 0; i < k; ++i) {
    c.seed = 1 + i;
    out.push_back(run_experiment(c));
  }
  return out;
}

bool all_ok(const std::vector<ExperimentReport>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.ok(); });
}

// Closed-form variances under N(0, 1) and Exp(1).
const double kVarExpNormal = std::exp(2.0) - std::exp(1.0);
const double kVarCosNormal = 0.5 * (1 + std::exp(-2.0)) - std::exp(-1.0);
const double kVarSqExp = 24.0 - 4.0;

Outcome exact_cv(const std::string& id, double svar_limit, double eff_floor) {
  const auto r = run_experiment(table_row(1, id));
  const bool ok = r.ok() && r.variance.svar_evm <= svar_limit &&
                  (eff_floor == 0 || r.variance.eff_evm.value >= eff_floor);
  return {ok, fmt("svar_evm %.3g, eff_evm %.3g", r.variance.svar_evm, r.variance.eff_evm.value)};
}

Outcome analytic_svar() {
  struct Row {
    int table;
    const char* id;
    double exact;
  };
  const Row rows[] = {{1, "t1_normal_sumexp", kVarExpNormal},
                      {1, "t1_normal_sumcos", kVarCosNormal},
                      {1, "t1_exp_sumsq", kVarSqExp},
                      {2, "t2_normal_sumsq", 20.0},
                      {2, "t2_normal_sumexp", 10 * kVarExpNormal}};
  bool ok = true;
  std::string detail;
  for (const auto& row : rows) {
    const auto r = run_experiment(table_row(row.table, row.id));
    const double rel = r.variance.svar / row.exact - 1;
    ok = ok && std::abs(rel) <= 0.05;
    detail += std::string(row.id) + fmt(" %.4g vs %.4g (%+.2f%%); ", r.variance.svar, row.exact, 100 * rel);
  }
  return {ok, detail};
}

Outcome evm_beats_ls() {
  const auto rs = seeds(table_row(2, "t2_normal_sumexp"), 10);
  int wins = 0;
  std::vector<double> ratio;
  for (const auto& r : rs) {
    if (r.ok() && r.variance.svar_ls && 10 * r.variance.svar_evm <= *r.variance.svar_ls) ++wins;
    if (r.variance.svar_ls) ratio.push_back(*r.variance.svar_ls / r.variance.svar_evm);
  }
  return {wins >= 8, fmt("%.0f/10 seeds, median svar_ls/svar_evm %.3g", wins, median(ratio))};
}

Outcome small_sample() {
  const auto rs = seeds(table_row(3, "t3_normal_sumcos"), 10);
  std::vector<double> v;
  for (const auto& r : rs) v.push_back(r.variance.svar_evm);
  const double m = median(v);
  return {all_ok(rs) && m <= 0.2, fmt("median svar_evm %.4g over 10 seeds", m)};
}

Outcome median_ratio(int table, const std::string& id, std::size_t k, double floor, std::vector<double>* keep) {
  const auto rs = seeds(table_row(table, id), k);
  std::vector<double> v;
  for (const auto& r : rs) v.push_back(r.variance.ratio);
  if (keep) *keep = v;
  const double m = median(v);
  return {all_ok(rs) && m >= floor, id + fmt(" median ratio %.4g over %.0f seeds", m, static_cast<double>(k))};
}

Outcome basket_exp1(std::vector<double>& d10) {
  const auto a = median_ratio(5, "t5_basket_d1", 5, 50, nullptr);
  const auto b = median_ratio(5, "t5_basket_d10", 5, 20, &d10);
  return {a.passed && b.passed, a.detail + "; " + b.detail};
}

Outcome basket_nesting(const std::vector<double>& exp1_d10) {
  std::vector<double> exp2;
  const auto r = median_ratio(6, "t6_basket_d10", 5, 0, &exp2);
  std::vector<double> diff;
  for (std::size_t i = 0; i < exp2.size(); ++i) diff.push_back(exp2[i] - exp1_d10[i]);
  const double m = median(diff);
  return {r.passed && m >= 0,
          fmt("median zeta2 %.4g, zeta1 %.4g, median paired difference %.4g", median(exp2), median(exp1_d10), m)};
}

Outcome u_statistic() {
  Rng rng(2024);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<std::size_t>(2 + rng.uniform(0, 400));
    std::vector<double> v(n);
    const double loc = rng.uniform(-50, 50), scale = std::exp(rng.uniform(-4, 4));
    for (auto& x : v) x = loc + scale * rng.normal();
    long double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += (long double)(v[i] - v[j]) * (v[i] - v[j]);
    const double oracle = static_cast<double>(s / (long double)(n * (n - 1)));
    worst = std::max(worst, std::abs(empirical_variance(v) - oracle) / oracle);
  }
  return {worst <= 1e-12, fmt("worst relative difference %.3g", worst)};
}

Outcome stein_zero_mean() {
  bool ok = true;
  std::string failed;
  for (const auto& fam : reference_families(1)) {
    const auto o = stein_zero_mean_check(*fam, 20, 100000, 7);
    if (!o.passed) {
      ok = false;
      failed += fam->family_id() + ": " + o.detail + "; ";
    }
  }
  return {ok, ok ? "8 families x 20 parameter draws within 4 stderr" : failed};
}

Outcome zero_variance() {
  struct Case {
    DensityPtr density;
    std::function<double(double)> f;
    double lo, hi;
  };
  const std::vector<Case> cases = {
      {std_normal(1), [](double x) { return x * x; }, -4, 4},
      {std_normal(1), [](double x) { return std::exp(x); }, -4, 4},
      {std_normal(1), [](double x) { return std::cos(x); }, -4, 4},
      {exponential_unit(), [](double x) { return x * x; }, 0.01, 10},
      {exponential_unit(), [](double x) { return std::cos(x); }, 0.01, 10}};
  QuadratureSpec quad;
  quad.abs_tol = 1e-10;
  double worst = 0;
  for (const auto& c : cases) {
    const auto phi = zero_variance_phi_1d(c.f, c.density, quad);
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(c.lo + (c.hi - c.lo) * i / 400);
    worst = std::max(worst, verify_zero_variance(c.f, *c.density, phi, phi.expectation(), grid));
  }
  return {worst <= 1e-5, fmt("worst grid residual %.3g over 5 cases", worst)};
}

Outcome lower_bound() {
  const auto r = lower_bound_scenario(10, 10000, 1);
  const double p = std::pow(0.9, 9);
  const double floor = p - 4 * std::sqrt(p * (1 - p) / 10000);
  return {r.frequency >= floor, fmt("frequency %.4f, floor %.4f (eps %.4g)", r.frequency, floor, r.eps)};
}

Outcome stationarity() {
  double worst = 0;
  std::string where;
  for (int t : {1, 2}) {
    for (const auto& c : table_configs(t)) {
      const auto built = build_density(c.density, c.seed);
      const auto family = make_family(c.family, built.density);
      const auto f = make_integrand(c.integrand, c.strike);
      const Dataset train = built.density->sample(c.n_train, derive_seed(c.seed, "train"));
      const auto fit = evm_fit_linear(f, *family, train);
      const auto g = finite_difference_gradient(f, *family, fit.a_hat, train, 1e-4);
      double norm = 0;
      for (double x : g) norm += x * x;
      const double scaled = std::sqrt(norm) / (1 + fit.objective);
      if (scaled > worst) {
        worst = scaled;
        where = c.experiment_id;
      }
    }
  }
  return {worst <= 1e-6, fmt("worst |grad|/(1+objective) %.3g", worst) + " at " + where};
}

}  // namespace

int main() {
  std::vector<double> exp1_d10;
  const std::vector<Criterion> criteria = {
      {1, "exact control variate, normal x^2", 1, [] { return exact_cv("t1_normal_sumsq", 1e-10, 1e9); }},
      {2, "exact control variate, exponential x^2", 1, [] { return exact_cv("t1_exp_sumsq", 1e-8, 0); }},
      {3, "analytic svar within 5%", 10, analytic_svar},
      {4, "EVM beats LS tenfold in 10-D", 60, evm_beats_ls},
      {5, "small-sample robustness, n_train = 50", 0, small_sample},
      {6, "rotated family, dependent Gaussian", 300,
       [] { return median_ratio(4, "t4_mvn_sumsq", 5, 20, nullptr); }},
      {7, "basket, exponential-power family", 600, [&] { return basket_exp1(exp1_d10); }},
      {8, "basket, log-quadratic family nests the first", 0, [&] { return basket_nesting(exp1_d10); }},
      {9, "U-statistic identity", 1, u_statistic},
      {10, "Stein zero mean, every family", 30, stein_zero_mean},
      {11, "zero-variance oracle residual", 5, zero_variance},
      {12, "lower-bound simulation", 5, lower_bound},
      {13, "stationarity of the closed-form fit", 0, stationarity},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool passed = o.passed;
    if (c.time_limit > 0 && seconds > c.time_limit) {
      passed = false;
      o.detail += fmt("; took %.1f s, limit %.0f s", seconds, c.time_limit);
    }
    if (!passed) ++failures;
    std::printf("%s  %2d  %-46s %7.2f s  %s\n", passed ? "PASS" : "FAIL", c.number, c.title.c_str(), seconds,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
