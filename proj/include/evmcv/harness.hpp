#pragma once

#include "evmcv/distributions.hpp"
#include "evmcv/fit.hpp"
#include "evmcv/stein_cv.hpp"
#include "evmcv/variance.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evmcv {

struct DensityConfig {
  /// "std_normal", "exp1", "mvn", "lognormal_gbm" or "product".
  std::string id = "std_normal";
  std::size_t dim = 1;
  /// product: one 1-D id per coordinate ("std_normal" or "exp1").
  std::vector<std::string> components;
  /// mvn: explicit matrix; when absent a random covariance is drawn from the "covariance" stream.
  std::optional<Matrix> covariance;
  // lognormal_gbm: one independent GBM asset per coordinate.
  double mu = 0.5;
  double sigma = 1.0;
  double t = 1.0;
  double x0_lo = 0.5;
  double x0_hi = 1.5;
  /// Explicit initial prices; otherwise Uniform[x0_lo, x0_hi] from the "basket_x0" stream.
  std::optional<std::vector<double>> x0;
};

enum class StartRule { Auto, Zero, SampleCovariance, Identity, BasketGrid };

std::string_view to_string(StartRule rule) noexcept;
StartRule parse_start_rule(std::string_view text);

struct ExperimentConfig {
  std::string experiment_id;
  DensityConfig density;
  /// "sumsq", "sumexp", "sumcos", "invnorm" or "basket_call".
  std::string integrand = "sumsq";
  /// basket_call strike; defaults to the sum of the initial prices.
  std::optional<double> strike;
  std::string family = "poly1d";
  /// EVM always runs; least squares only for linear families.
  bool fit_ls = true;
  StartRule start = StartRule::Auto;
  std::size_t n_train = 500;
  std::size_t n_test = 100000;
  std::uint64_t seed = 1;
  CostModel cost;
  SearchOptions search;
  /// Published reference values for this row (svar, svar_evm, svar_ls, eff_evm, eff_ls, ratio).
  std::map<std::string, double> reference;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct ExperimentReport {
  std::string experiment_id;
  std::string density_id;
  std::string integrand_id;
  std::string family_id;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  CostModel cost;
  VarianceReport variance;
  std::optional<FitResult> evm;
  std::optional<FitResult> ls;
  std::vector<double> basket_x0;
  std::optional<double> strike;
  std::map<std::string, double> reference;
  /// Set when the experiment could not be completed; the numeric fields hold what was reached.
  std::optional<std::string> error;
  // Wall-clock seconds. Kept out of emitted files so reports stay byte-identical.
  double train_seconds = 0.0;
  double test_seconds = 0.0;

  bool ok() const noexcept { return !error.has_value(); }
};

/// The integrand named by id; strike is required for "basket_call".
Integrand make_integrand(std::string_view id, std::optional<double> strike = std::nullopt);

struct BuiltDensity {
  DensityPtr density;
  std::vector<double> x0;  // basket only
};

/// Materializes the density of a config, drawing any random ingredients from
/// the streams derived from seed.
BuiltDensity build_density(const DensityConfig& config, std::uint64_t seed);

/// Train on a "train" stream sample, fit, then evaluate on an independent "test" stream sample.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Built-in rows for tables 1..7:
///   1 one-dimensional normal and exponential, poly1d;
///   2 ten-dimensional independent coordinates, additive_poly;
///   3 as 2 for the normal rows with n_train = 50;
///   4 dependent Gaussian, rotated_poly;
///   5 basket call, basket_exp1;  6 basket call, basket_exp2;
///   7 dependent Gaussian, gauss_hermite.
std::vector<ExperimentConfig> table_configs(int table);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Linear-interpolation quartiles; NaN fields for an empty input.
Quartiles quartiles(std::vector<double> values);

struct ReplicateSummary {
  std::string experiment_id;
  std::size_t runs = 0;
  std::size_t successes = 0;
  Quartiles ratio;
  Quartiles svar_evm;
  Quartiles svar;
  std::optional<Quartiles> svar_ls;
  std::vector<ExperimentReport> reports;
};

/// Runs config with seeds base_seed, base_seed + 1, ..., base_seed + k - 1 and
/// summarizes the successful runs.
ReplicateSummary replicate(const ExperimentConfig& config, std::size_t k, std::uint64_t base_seed);

}  // namespace evmcv
