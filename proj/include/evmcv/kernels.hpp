#pragma once

// Data-parallel row kernels.
//
// Every kernel has an OpenMP version (evmcv::kernels) and a plain loop in
// evmcv::kernels::serial kept as the reference the tests compare against.
// Reductions split the input into fixed kReductionChunk-sized chunks and
// combine the partial sums in chunk order, so results are bit-identical for
// any thread count.

#include "evmcv/distributions.hpp"
#include "evmcv/stein_cv.hpp"

#include <span>
#include <vector>

namespace evmcv {

/// A dataset together with the density score at every row, computed once.
struct ScoredSample {
  const Dataset* data = nullptr;
  RowMatrix scores;

  std::size_t size() const noexcept { return data->size(); }
  std::size_t dim() const noexcept { return data->dim(); }
  ConstPoint point(std::size_t i) const noexcept { return data->row(i); }
  ConstPoint score(std::size_t i) const noexcept {
    return {scores.data() + i * dim(), dim()};
  }
};

namespace kernels {

inline constexpr std::size_t kReductionChunk = 4096;

/// Validates every row against the support and evaluates the score.
ScoredSample score_sample(const Density& density, const Dataset& data);

std::vector<double> integrand_values(const Integrand& f, const Dataset& data);

/// out[i] = zeta_a(X_i); a must be admissible.
void zeta_values(const CvFamily& family, std::span<const double> a, const ScoredSample& sample,
                 std::span<double> out);

/// out[i] = f_values[i] - zeta_a(X_i).
void reduced_values(std::span<const double> f_values, const CvFamily& family,
                    std::span<const double> a, const ScoredSample& sample, std::span<double> out);

/// U-statistic (1/(n(n-1))) sum_{i<j} (v_i - v_j)^2, accumulated around v_0.
double empirical_variance(std::span<const double> values);

/// Row-major n x m basis matrix of a linear family.
RowMatrix basis_matrix(const CvFamily& family, const ScoredSample& sample);

namespace serial {

ScoredSample score_sample(const Density& density, const Dataset& data);
std::vector<double> integrand_values(const Integrand& f, const Dataset& data);
void zeta_values(const CvFamily& family, std::span<const double> a, const ScoredSample& sample,
                 std::span<double> out);
void reduced_values(std::span<const double> f_values, const CvFamily& family,
                    std::span<const double> a, const ScoredSample& sample, std::span<double> out);
double empirical_variance(std::span<const double> values);
RowMatrix basis_matrix(const CvFamily& family, const ScoredSample& sample);

}  // namespace serial
}  // namespace kernels
}  // namespace evmcv
