#pragma once

#include "evmcv/distributions.hpp"
#include "evmcv/stein_cv.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace evmcv {

struct CheckOutcome {
  bool passed = false;
  std::string detail;
};

struct Check {
  std::string name;
  std::function<CheckOutcome()> run;
};

/// Central-difference gradient of log_density against score at random interior points.
CheckOutcome score_gradient_check(const Density& density, std::size_t points, std::uint64_t seed,
                                  double rel_tol = 1e-5);

/// second_ratio against finite differences of the score plus score_i score_j.
CheckOutcome second_ratio_check(const Density& density, std::size_t points, std::uint64_t seed,
                                double rel_tol = 1e-5);

/// Random admissible parameters for a family: entries Uniform[-1, 1], except
/// the quadratic-log coefficient of basket_exp2, drawn from [-1, 0.1]. Against
/// a log-normal with sigma^2 t = 1, zeta has infinite variance once that
/// coefficient reaches 1/4, and a 4-stderr test needs a finite fourth moment
/// (coefficient below 1/8).
std::vector<double> random_parameters(const CvFamily& family, Rng& rng);

/// |MC mean of zeta_a| <= 4 stderr for `trials` random parameter vectors.
CheckOutcome stein_zero_mean_check(const CvFamily& family, std::size_t trials, std::size_t n, std::uint64_t seed);

/// One instance of every control-variate family on its natural density.
std::vector<CvFamilyPtr> reference_families(std::uint64_t seed);

/// The full battery run by `evmcv verify`.
std::vector<Check> oracle_checks();

/// Prints one PASS/FAIL line per check; returns 0 when all pass and 2 otherwise.
/// A check that throws counts as a failure.
int run_checks(const std::vector<Check>& checks, std::ostream& out);

}  // namespace evmcv
