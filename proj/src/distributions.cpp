#include "evmcv/distributions.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <numeric>
#include <sstream>

namespace evmcv {

namespace {

std::string point_text(ConstPoint x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

}  // namespace

Dataset column(const Dataset& data, std::size_t j) {
  Dataset out;
  out.points = data.points.col(static_cast<Eigen::Index>(j));
  out.seed = data.seed;
  out.density_id = data.density_id;
  return out;
}

Density::Density(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("density dimension must be positive");
}

bool Density::in_support(ConstPoint x) const noexcept {
  if (x.size() != dim_) return false;
  for (std::size_t i = 0; i < dim_; ++i) {
    if (!std::isfinite(x[i]) || !support(i).contains(x[i])) return false;
  }
  return true;
}

void Density::require_support(ConstPoint x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument(id() + ": point has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(dim_));
  }
  if (!in_support(x)) throw OutOfSupport(id() + ": point " + point_text(x) + " outside support");
}

double Density::log_density(ConstPoint x) const {
  require_support(x);
  return log_density_unchecked(x);
}

void Density::score(ConstPoint x, std::span<double> out) const {
  require_support(x);
  score_unchecked(x, out);
}

Vector Density::score(ConstPoint x) const {
  Vector out(static_cast<Eigen::Index>(dim_));
  score(x, {out.data(), dim_});
  return out;
}

double Density::second_ratio(std::size_t i, std::size_t j, ConstPoint x) const {
  if (!has_second_ratio()) throw std::logic_error(id() + ": second-order ratio not available");
  require_support(x);
  Vector s(static_cast<Eigen::Index>(dim_));
  score_unchecked(x, {s.data(), dim_});
  return log_hessian_unchecked(i, j, x) + s[static_cast<Eigen::Index>(i)] * s[static_cast<Eigen::Index>(j)];
}

double Density::log_hessian_unchecked(std::size_t, std::size_t, ConstPoint) const {
  throw std::logic_error(id() + ": log-density Hessian not available");
}

Dataset Density::sample(std::size_t count, std::uint64_t seed) const {
  if (count < 2) throw std::invalid_argument("a dataset needs at least 2 points");
  Dataset out;
  out.points.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim_));
  out.seed = seed;
  out.density_id = id();
  const std::size_t blocks = (count + kSampleBlock - 1) / kSampleBlock;
  double* base = out.points.data();
  const std::size_t d = dim_;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    const std::size_t first = static_cast<std::size_t>(b) * kSampleBlock;
    const std::size_t last = std::min(count, first + kSampleBlock);
    for (std::size_t i = first; i < last; ++i) sample_point(rng, {base + i * d, d});
  }
  return out;
}

// --- StdNormal -------------------------------------------------------------

double StdNormal::log_density_unchecked(ConstPoint x) const {
  double s = 0.0;
  for (double v : x) s += v * v;
  return -0.5 * s;
}

void StdNormal::score_unchecked(ConstPoint x, std::span<double> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
}

double StdNormal::log_hessian_unchecked(std::size_t i, std::size_t j, ConstPoint) const {
  return i == j ? -1.0 : 0.0;
}

void StdNormal::sample_point(Rng& rng, std::span<double> out) const {
  for (double& v : out) v = rng.normal();
}

std::vector<DensityPtr> StdNormal::marginals() const {
  return std::vector<DensityPtr>(dim(), std::make_shared<const StdNormal>(1));
}

std::vector<DensityPtr> Exponential::marginals() const {
  return {std::make_shared<const Exponential>()};
}

// --- Gaussian covariance ---------------------------------------------------

CovarianceSpec make_covariance(const Matrix& matrix) {
  if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("covariance must be a non-empty square matrix");
  }
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(matrix);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("covariance is not positive definite");
  }
  return {matrix, eig.eigenvalues()};
}

CovarianceSpec random_covariance(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("covariance dimension must be positive");
  const auto n = static_cast<Eigen::Index>(dim);
  Rng rng(seed);
  Matrix raw(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) raw(i, j) = rng.uniform(-1.0, 1.0);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(raw).householderQ();
  Vector lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lambda[i] = n == 1 ? 0.2 : 0.2 + 1.8 * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  Matrix sigma = q * lambda.asDiagonal() * q.transpose();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return {sigma, lambda};
}

MultivariateNormal::MultivariateNormal(CovarianceSpec spec)
    : Density(static_cast<std::size_t>(spec.matrix.rows())), spec_(make_covariance(spec.matrix)) {
  Eigen::LLT<Matrix> llt(spec_.matrix);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance is not positive definite");
  chol_lower_ = llt.matrixL();
  precision_ = llt.solve(Matrix::Identity(spec_.matrix.rows(), spec_.matrix.cols()));
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
}

double MultivariateNormal::log_density_unchecked(ConstPoint x) const {
  Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return -0.5 * v.dot(precision_ * v);
}

void MultivariateNormal::score_unchecked(ConstPoint x, std::span<double> out) const {
  Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::Map<Vector> s(out.data(), static_cast<Eigen::Index>(out.size()));
  s.noalias() = -(precision_ * v);
}

void MultivariateNormal::sample_point(Rng& rng, std::span<double> out) const {
  const auto n = static_cast<Eigen::Index>(dim());
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  Eigen::Map<Vector>(out.data(), n).noalias() = chol_lower_ * z;
}

// --- LogNormalGbm ----------------------------------------------------------

LogNormalGbm::LogNormalGbm(double x0, double mu, double sigma, double t)
    : Density(1), x0_(x0), mu_(mu), sigma_(sigma), t_(t) {
  if (!(x0 > 0.0) || !(sigma > 0.0) || !(t > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("lognormal_gbm requires x0, sigma, t > 0");
  }
  log_location_ = std::log(x0) + (mu - 0.5 * sigma * sigma) * t;
  log_variance_ = sigma * sigma * t;
}

double LogNormalGbm::log_density_unchecked(ConstPoint x) const {
  const double lx = std::log(x[0]);
  const double z = lx - log_location_;
  return -lx - z * z / (2.0 * log_variance_);
}

void LogNormalGbm::score_unchecked(ConstPoint x, std::span<double> out) const {
  const double z = std::log(x[0]) - log_location_;
  out[0] = -(1.0 + z / log_variance_) / x[0];
}

double LogNormalGbm::log_hessian_unchecked(std::size_t, std::size_t, ConstPoint x) const {
  // d/dx of -(1 + z/v)/x with z = ln x - m.
  const double z = std::log(x[0]) - log_location_;
  return (1.0 + z / log_variance_ - 1.0 / log_variance_) / (x[0] * x[0]);
}

void LogNormalGbm::sample_point(Rng& rng, std::span<double> out) const {
  out[0] = std::exp(log_location_ + std::sqrt(log_variance_) * rng.normal());
}

std::vector<DensityPtr> LogNormalGbm::marginals() const {
  return {std::make_shared<const LogNormalGbm>(*this)};
}

// --- ProductDensity --------------------------------------------------------

namespace {
std::size_t total_dim(const std::vector<DensityPtr>& components) {
  if (components.empty()) throw std::invalid_argument("product density needs at least one component");
  std::size_t d = 0;
  for (const auto& c : components) {
    if (!c) throw std::invalid_argument("product density component is null");
    d += c->dim();
  }
  return d;
}
}  // namespace

ProductDensity::ProductDensity(std::vector<DensityPtr> components)
    : Density(total_dim(components)), components_(std::move(components)) {
  std::size_t offset = 0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    offsets_.push_back(offset);
    for (std::size_t i = 0; i < components_[k]->dim(); ++i) owner_.push_back(k);
    offset += components_[k]->dim();
    all_second_ratio_ = all_second_ratio_ && components_[k]->has_second_ratio();
  }
}

Interval ProductDensity::support(std::size_t coord) const {
  const std::size_t k = owner_.at(coord);
  return components_[k]->support(coord - offsets_[k]);
}

double ProductDensity::log_density_unchecked(ConstPoint x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    s += components_[k]->log_density_unchecked(x.subspan(offsets_[k], components_[k]->dim()));
  }
  return s;
}

void ProductDensity::score_unchecked(ConstPoint x, std::span<double> out) const {
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const std::size_t dk = components_[k]->dim();
    components_[k]->score_unchecked(x.subspan(offsets_[k], dk), out.subspan(offsets_[k], dk));
  }
}

double ProductDensity::log_hessian_unchecked(std::size_t i, std::size_t j, ConstPoint x) const {
  const std::size_t k = owner_.at(i);
  if (owner_.at(j) != k) return 0.0;
  const std::size_t dk = components_[k]->dim();
  return components_[k]->log_hessian_unchecked(i - offsets_[k], j - offsets_[k],
                                                x.subspan(offsets_[k], dk));
}

void ProductDensity::sample_point(Rng& rng, std::span<double> out) const {
  for (std::size_t k = 0; k < components_.size(); ++k) {
    components_[k]->sample_point(rng, out.subspan(offsets_[k], components_[k]->dim()));
  }
}

std::vector<DensityPtr> ProductDensity::marginals() const {
  std::vector<DensityPtr> out;
  for (const auto& c : components_) {
    if (c->dim() == 1) {
      out.push_back(c);
      continue;
    }
    auto inner = c->marginals();
    if (inner.empty()) return {};
    out.insert(out.end(), inner.begin(), inner.end());
  }
  return out;
}

// --- factories -------------------------------------------------------------

std::shared_ptr<const StdNormal> std_normal(std::size_t dim) {
  return std::make_shared<const StdNormal>(dim);
}

std::shared_ptr<const Exponential> exponential_unit() { return std::make_shared<const Exponential>(); }

std::shared_ptr<const MultivariateNormal> mvn(CovarianceSpec spec) {
  return std::make_shared<const MultivariateNormal>(std::move(spec));
}

std::shared_ptr<const LogNormalGbm> lognormal_gbm(double x0, double mu, double sigma, double t) {
  return std::make_shared<const LogNormalGbm>(x0, mu, sigma, t);
}

std::shared_ptr<const ProductDensity> product_density(std::vector<DensityPtr> components) {
  return std::make_shared<const ProductDensity>(std::move(components));
}

}  // namespace evmcv
