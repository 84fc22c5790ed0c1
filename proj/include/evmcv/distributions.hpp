#pragma once

#include "evmcv/rng.hpp"
#include "evmcv/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace evmcv {

/// Open interval (lo, hi); endpoints may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return x > lo && x < hi; }
};

/// An i.i.d. sample stored row-major, one point per row.
struct Dataset {
  RowMatrix points;
  std::uint64_t seed = 0;
  std::string density_id;

  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points.cols()); }
  ConstPoint row(std::size_t i) const noexcept {
    return {points.data() + i * dim(), dim()};
  }
};

/// Extracts coordinate j of every point as a 1-D dataset.
Dataset column(const Dataset& data, std::size_t j);

enum class DensityKind { StdNormal, Exponential, Mvn, LogNormal, Product };

/// Smallest positive value accepted by densities whose score carries a 1/x term.
inline constexpr double kPositiveSupportFloor = 1e-12;

/// A d-dimensional density known up to a normalizing constant.
///
/// Public evaluators validate the point against the support and throw
/// OutOfSupport; the *_unchecked virtuals skip that check and are what the
/// batch kernels call after validating a dataset once.
class Density {
 public:
  virtual ~Density() = default;

  std::size_t dim() const noexcept { return dim_; }
  virtual DensityKind kind() const noexcept = 0;
  /// Config identifier: "std_normal", "exp1", "mvn", "lognormal_gbm", "product".
  virtual std::string id() const = 0;
  virtual Interval support(std::size_t coord) const = 0;

  bool in_support(ConstPoint x) const noexcept;
  void require_support(ConstPoint x) const;

  double log_density(ConstPoint x) const;
  void score(ConstPoint x, std::span<double> out) const;
  Vector score(ConstPoint x) const;

  virtual bool has_second_ratio() const noexcept { return false; }
  /// d_i d_j pi / pi = d_i d_j log pi + score_i * score_j.
  double second_ratio(std::size_t i, std::size_t j, ConstPoint x) const;

  virtual double log_density_unchecked(ConstPoint x) const = 0;
  virtual void score_unchecked(ConstPoint x, std::span<double> out) const = 0;
  virtual double log_hessian_unchecked(std::size_t i, std::size_t j, ConstPoint x) const;

  virtual void sample_point(Rng& rng, std::span<double> out) const = 0;

  /// Draws count points; block b of kSampleBlock rows uses stream derive_seed(seed, b),
  /// so the result does not depend on the number of threads.
  Dataset sample(std::size_t count, std::uint64_t seed) const;

  /// 1-D factors when coordinates are independent, otherwise empty.
  virtual std::vector<std::shared_ptr<const Density>> marginals() const { return {}; }

  static constexpr std::size_t kSampleBlock = 1024;

 protected:
  explicit Density(std::size_t dim);

 private:
  std::size_t dim_;
};

using DensityPtr = std::shared_ptr<const Density>;

class StdNormal final : public Density {
 public:
  explicit StdNormal(std::size_t dim) : Density(dim) {}
  DensityKind kind() const noexcept override { return DensityKind::StdNormal; }
  std::string id() const override { return "std_normal"; }
  Interval support(std::size_t) const override { return {}; }
  bool has_second_ratio() const noexcept override { return true; }
  double log_density_unchecked(ConstPoint x) const override;
  void score_unchecked(ConstPoint x, std::span<double> out) const override;
  double log_hessian_unchecked(std::size_t i, std::size_t j, ConstPoint x) const override;
  void sample_point(Rng& rng, std::span<double> out) const override;
  std::vector<DensityPtr> marginals() const override;
};

class Exponential final : public Density {
 public:
  Exponential() : Density(1) {}
  DensityKind kind() const noexcept override { return DensityKind::Exponential; }
  std::string id() const override { return "exp1"; }
  Interval support(std::size_t) const override {
    return {0.0, std::numeric_limits<double>::infinity()};
  }
  bool has_second_ratio() const noexcept override { return true; }
  double log_density_unchecked(ConstPoint x) const override { return -x[0]; }
  void score_unchecked(ConstPoint, std::span<double> out) const override { out[0] = -1.0; }
  double log_hessian_unchecked(std::size_t, std::size_t, ConstPoint) const override { return 0.0; }
  void sample_point(Rng& rng, std::span<double> out) const override { out[0] = rng.exponential(); }
  std::vector<DensityPtr> marginals() const override;
};

/// Covariance matrix of a zero-mean Gaussian together with its spectrum.
struct CovarianceSpec {
  Matrix matrix;
  Vector eigenvalues;
};

/// Validates symmetry (1e-12) and positive definiteness; fills eigenvalues.
CovarianceSpec make_covariance(const Matrix& matrix);

/// Q diag(lambda) Q^T with Q from QR of a Uniform[-1,1] matrix and lambda evenly spaced on [0.2, 2.0].
CovarianceSpec random_covariance(std::size_t dim, std::uint64_t seed);

class MultivariateNormal final : public Density {
 public:
  explicit MultivariateNormal(CovarianceSpec spec);
  DensityKind kind() const noexcept override { return DensityKind::Mvn; }
  std::string id() const override { return "mvn"; }
  Interval support(std::size_t) const override { return {}; }
  bool has_second_ratio() const noexcept override { return true; }
  double log_density_unchecked(ConstPoint x) const override;
  void score_unchecked(ConstPoint x, std::span<double> out) const override;
  double log_hessian_unchecked(std::size_t i, std::size_t j, ConstPoint) const override {
    return -precision_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  void sample_point(Rng& rng, std::span<double> out) const override;

  const CovarianceSpec& covariance() const noexcept { return spec_; }
  const Matrix& precision() const noexcept { return precision_; }

 private:
  CovarianceSpec spec_;
  Matrix precision_;
  Matrix chol_lower_;
};

/// Marginal law of X(t) for dX = X (mu dt + sigma dW), X(0) = x0.
class LogNormalGbm final : public Density {
 public:
  LogNormalGbm(double x0, double mu, double sigma, double t);
  DensityKind kind() const noexcept override { return DensityKind::LogNormal; }
  std::string id() const override { return "lognormal_gbm"; }
  Interval support(std::size_t) const override {
    return {kPositiveSupportFloor, std::numeric_limits<double>::infinity()};
  }
  bool has_second_ratio() const noexcept override { return true; }
  double log_density_unchecked(ConstPoint x) const override;
  void score_unchecked(ConstPoint x, std::span<double> out) const override;
  double log_hessian_unchecked(std::size_t i, std::size_t j, ConstPoint x) const override;
  void sample_point(Rng& rng, std::span<double> out) const override;
  std::vector<DensityPtr> marginals() const override;

  double x0() const noexcept { return x0_; }
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double t() const noexcept { return t_; }
  /// Mean of ln X(t).
  double log_location() const noexcept { return log_location_; }
  /// sigma^2 t.
  double log_variance() const noexcept { return log_variance_; }

 private:
  double x0_, mu_, sigma_, t_;
  double log_location_, log_variance_;
};

/// Independent concatenation of component densities.
class ProductDensity final : public Density {
 public:
  explicit ProductDensity(std::vector<DensityPtr> components);
  DensityKind kind() const noexcept override { return DensityKind::Product; }
  std::string id() const override { return "product"; }
  Interval support(std::size_t coord) const override;
  bool has_second_ratio() const noexcept override { return all_second_ratio_; }
  double log_density_unchecked(ConstPoint x) const override;
  void score_unchecked(ConstPoint x, std::span<double> out) const override;
  double log_hessian_unchecked(std::size_t i, std::size_t j, ConstPoint x) const override;
  void sample_point(Rng& rng, std::span<double> out) const override;
  std::vector<DensityPtr> marginals() const override;

  const std::vector<DensityPtr>& components() const noexcept { return components_; }

 private:
  std::vector<DensityPtr> components_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> owner_;  // coordinate -> component
  bool all_second_ratio_ = true;
};

std::shared_ptr<const StdNormal> std_normal(std::size_t dim);
std::shared_ptr<const Exponential> exponential_unit();
std::shared_ptr<const MultivariateNormal> mvn(CovarianceSpec spec);
std::shared_ptr<const LogNormalGbm> lognormal_gbm(double x0, double mu, double sigma, double t);
std::shared_ptr<const ProductDensity> product_density(std::vector<DensityPtr> components);

}  // namespace evmcv
