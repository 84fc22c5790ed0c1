#include "evmcv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

namespace evmcv::kernels {

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

Moments shifted_moments(std::span<const double> values, double shift) {
  Moments m;
  for (double v : values) {
    const double c = v - shift;
    m.sum += c;
    m.sum_sq += c * c;
  }
  return m;
}

double variance_from_moments(const Moments& m, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double centered = m.sum_sq - m.sum * m.sum / nn;
  return std::max(0.0, centered / (nn - 1.0));
}

void require_sizes(std::size_t n) {
  if (n < 2) throw std::invalid_argument("empirical variance needs at least 2 values");
}

// Exceptions cannot leave an OpenMP region; the first one is parked and rethrown.
class ErrorSlot {
 public:
  template <class Fn>
  void run(Fn&& fn) noexcept {
    try {
      fn();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace

// --- serial reference ------------------------------------------------------

namespace serial {

ScoredSample score_sample(const Density& density, const Dataset& data) {
  if (data.dim() != density.dim()) throw std::invalid_argument("dataset dimension does not match density");
  ScoredSample s{&data, RowMatrix(data.points.rows(), data.points.cols())};
  for (std::size_t i = 0; i < data.size(); ++i) {
    density.require_support(data.row(i));
    density.score_unchecked(data.row(i), {s.scores.data() + i * data.dim(), data.dim()});
  }
  return s;
}

std::vector<double> integrand_values(const Integrand& f, const Dataset& data) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = f(data.row(i));
  return out;
}

void zeta_values(const CvFamily& family, std::span<const double> a, const ScoredSample& sample,
                 std::span<double> out) {
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out[i] = family.eval_with_score(a, sample.point(i), sample.score(i));
  }
}

void reduced_values(std::span<const double> f_values, const CvFamily& family,
                    std::span<const double> a, const ScoredSample& sample, std::span<double> out) {
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out[i] = f_values[i] - family.eval_with_score(a, sample.point(i), sample.score(i));
  }
}

double empirical_variance(std::span<const double> values) {
  require_sizes(values.size());
  return variance_from_moments(shifted_moments(values, values[0]), values.size());
}

RowMatrix basis_matrix(const CvFamily& family, const ScoredSample& sample) {
  const std::size_t m = family.param_dim();
  RowMatrix out(static_cast<Eigen::Index>(sample.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < sample.size(); ++i) {
    family.basis_with_score(sample.point(i), sample.score(i), {out.data() + i * m, m});
  }
  return out;
}

}  // namespace serial

// --- OpenMP ----------------------------------------------------------------

ScoredSample score_sample(const Density& density, const Dataset& data) {
  if (data.dim() != density.dim()) throw std::invalid_argument("dataset dimension does not match density");
  ScoredSample s{&data, RowMatrix(data.points.rows(), data.points.cols())};
  const auto n = static_cast<std::ptrdiff_t>(data.size());
  const std::size_t d = data.dim();
  std::ptrdiff_t bad = n;
#pragma omp parallel for schedule(static) reduction(min : bad)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = data.row(static_cast<std::size_t>(i));
    if (!density.in_support(row)) {
      bad = std::min(bad, i);
      continue;
    }
    density.score_unchecked(row, {s.scores.data() + static_cast<std::size_t>(i) * d, d});
  }
  if (bad < n) density.require_support(data.row(static_cast<std::size_t>(bad)));
  return s;
}

std::vector<double> integrand_values(const Integrand& f, const Dataset& data) {
  std::vector<double> out(data.size());
  const auto n = static_cast<std::ptrdiff_t>(data.size());
  ErrorSlot errors;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    errors.run([&] { out[static_cast<std::size_t>(i)] = f(data.row(static_cast<std::size_t>(i))); });
  }
  errors.rethrow();
  return out;
}

void zeta_values(const CvFamily& family, std::span<const double> a, const ScoredSample& sample,
                 std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(sample.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out[r] = family.eval_with_score(a, sample.point(r), sample.score(r));
  }
}

void reduced_values(std::span<const double> f_values, const CvFamily& family,
                    std::span<const double> a, const ScoredSample& sample, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(sample.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out[r] = f_values[r] - family.eval_with_score(a, sample.point(r), sample.score(r));
  }
}

double empirical_variance(std::span<const double> values) {
  require_sizes(values.size());
  const std::size_t n = values.size();
  const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
  const double shift = values[0];
  if (chunks == 1) return variance_from_moments(shifted_moments(values, shift), n);
  std::vector<Moments> partial(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t first = static_cast<std::size_t>(c) * kReductionChunk;
    const std::size_t count = std::min(kReductionChunk, n - first);
    partial[static_cast<std::size_t>(c)] = shifted_moments(values.subspan(first, count), shift);
  }
  Moments total;
  for (const Moments& m : partial) {
    total.sum += m.sum;
    total.sum_sq += m.sum_sq;
  }
  return variance_from_moments(total, n);
}

RowMatrix basis_matrix(const CvFamily& family, const ScoredSample& sample) {
  const std::size_t m = family.param_dim();
  RowMatrix out(static_cast<Eigen::Index>(sample.size()), static_cast<Eigen::Index>(m));
  const auto n = static_cast<std::ptrdiff_t>(sample.size());
  ErrorSlot errors;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    errors.run([&] { family.basis_with_score(sample.point(r), sample.score(r), {out.data() + r * m, m}); });
  }
  errors.rethrow();
  return out;
}

}  // namespace evmcv::kernels
