#include "evmcv/stein_cv.hpp"

#include "evmcv/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace evmcv {

namespace {

// phi(y) and phi'(y) for phi(y) = sum_k c_k y^k, by Horner.
struct PolyValue {
  double value;
  double slope;
};

PolyValue horner(const double* c, std::size_t degree, double y) {
  double v = c[degree];
  double s = 0.0;
  for (std::size_t k = degree; k-- > 0;) {
    s = s * y + v;
    v = v * y + c[k];
  }
  return {v, s};
}

std::vector<DensityPtr> require_marginals(const DensityPtr& density, const char* family) {
  if (!density) throw std::invalid_argument(std::string(family) + ": density is null");
  auto parts = density->marginals();
  if (parts.size() != density->dim()) {
    throw std::invalid_argument(std::string(family) + ": density is not a product of 1-D densities");
  }
  return parts;
}

}  // namespace

// --- CvFamily --------------------------------------------------------------

CvFamily::CvFamily(std::string family_id, DensityPtr density, std::size_t param_dim, bool linear)
    : family_id_(std::move(family_id)), density_(std::move(density)), mask_(param_dim, false), linear_(linear) {
  if (!density_) throw std::invalid_argument(family_id_ + ": density is null");
}

std::size_t CvFamily::free_param_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), false));
}

std::vector<double> CvFamily::admissible(std::span<const double> a) const {
  if (a.size() != param_dim()) {
    throw std::invalid_argument(family_id_ + ": expected " + std::to_string(param_dim()) +
                                " parameters, got " + std::to_string(a.size()));
  }
  std::vector<double> out(a.begin(), a.end());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (mask_[k]) out[k] = 0.0;
  }
  return out;
}

double CvFamily::eval(std::span<const double> a, ConstPoint x) const {
  const auto pinned = admissible(a);
  const Vector s = density_->score(x);
  return eval_with_score(pinned, x, {s.data(), static_cast<std::size_t>(s.size())});
}

void CvFamily::basis_with_score(ConstPoint, ConstPoint, std::span<double>) const {
  throw std::logic_error(family_id_ + ": family is not linear in its parameters");
}

std::vector<double> CvFamily::basis(ConstPoint x) const {
  const Vector s = density_->score(x);
  std::vector<double> out(param_dim());
  basis_with_score(x, {s.data(), static_cast<std::size_t>(s.size())}, out);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (mask_[k]) out[k] = 0.0;
  }
  return out;
}

// --- poly1d ----------------------------------------------------------------

Poly1dFamily::Poly1dFamily(DensityPtr density, std::size_t degree)
    : CvFamily("poly1d", std::move(density), degree + 1, true), degree_(degree) {
  if (this->density().dim() != 1) throw std::invalid_argument("poly1d: density must be 1-D");
  // pi(0) > 0 for Exp(1), so the field must vanish at the boundary.
  if (this->density().kind() == DensityKind::Exponential) pin(0);
}

double Poly1dFamily::eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const {
  const PolyValue p = horner(a.data(), degree_, x[0]);
  return p.slope + p.value * score[0];
}

void Poly1dFamily::basis_with_score(ConstPoint x, ConstPoint score, std::span<double> out) const {
  double power = 1.0;  // x^k
  double prev = 0.0;   // x^(k-1)
  for (std::size_t k = 0; k <= degree_; ++k) {
    out[k] = static_cast<double>(k) * prev + power * score[0];
    prev = power;
    power *= x[0];
  }
}

std::string Poly1dFamily::layout() const {
  return "a_0..a_" + std::to_string(degree_) + " (coefficient of x^k)";
}

// --- additive_poly ---------------------------------------------------------

AdditivePolyFamily::AdditivePolyFamily(DensityPtr density, std::size_t degree)
    : CvFamily("additive_poly", density, density ? density->dim() * (degree + 1) : 0, true), degree_(degree) {
  const auto parts = require_marginals(density, "additive_poly");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i]->kind() == DensityKind::Exponential) pin(i * (degree_ + 1));
  }
}

double AdditivePolyFamily::eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const {
  const std::size_t block = degree_ + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const PolyValue p = horner(a.data() + i * block, degree_, x[i]);
    total += p.slope + p.value * score[i];
  }
  return total;
}

void AdditivePolyFamily::basis_with_score(ConstPoint x, ConstPoint score, std::span<double> out) const {
  const std::size_t block = degree_ + 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double power = 1.0;
    double prev = 0.0;
    for (std::size_t k = 0; k <= degree_; ++k) {
      out[i * block + k] = static_cast<double>(k) * prev + power * score[i];
      prev = power;
      power *= x[i];
    }
  }
}

std::string AdditivePolyFamily::layout() const {
  return "row-major d x " + std::to_string(degree_ + 1) + ": a_i0..a_i" + std::to_string(degree_) +
         " per coordinate";
}

// --- gauss_hermite ---------------------------------------------------------

namespace {
std::size_t hermite_dim(const DensityPtr& density) {
  if (!density) throw std::invalid_argument("gauss_hermite: density is null");
  if (!density->has_second_ratio()) {
    throw std::invalid_argument("gauss_hermite: density does not expose second-order ratios");
  }
  const std::size_t d = density->dim();
  return d + d * (d + 1) / 2;
}
}  // namespace

GaussianHermiteFamily::GaussianHermiteFamily(DensityPtr density)
    : CvFamily("gauss_hermite", density, hermite_dim(density), true) {}

double GaussianHermiteFamily::eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const {
  const std::size_t d = x.size();
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) total += a[i] * score[i];
  std::size_t k = d;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j, ++k) {
      if (a[k] != 0.0) {
        total += a[k] * (density().log_hessian_unchecked(i, j, x) + score[i] * score[j]);
      }
    }
  }
  return total;
}

void GaussianHermiteFamily::basis_with_score(ConstPoint x, ConstPoint score, std::span<double> out) const {
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) out[i] = score[i];
  std::size_t k = d;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j, ++k) {
      out[k] = density().log_hessian_unchecked(i, j, x) + score[i] * score[j];
    }
  }
}

std::string GaussianHermiteFamily::layout() const {
  return "a_1..a_d (first order), then a_ij for i <= j with i outer (second order)";
}

// --- rotated_poly ----------------------------------------------------------

namespace {
std::size_t rotated_dim(const DensityPtr& density) {
  if (!density) throw std::invalid_argument("rotated_poly: density is null");
  const std::size_t d = density->dim();
  return 4 * d + d * d;
}
}  // namespace

RotatedPolyFamily::RotatedPolyFamily(DensityPtr density)
    : CvFamily("rotated_poly", density, rotated_dim(density), false) {}

double RotatedPolyFamily::eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const {
  const std::size_t d = x.size();
  if (d != density().dim()) throw std::invalid_argument("rotated_poly: dimension mismatch");
  const double* b = a.data() + b_offset();
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double* coeffs = a.data() + 4 * i;
    if (coeffs[0] == 0.0 && coeffs[1] == 0.0 && coeffs[2] == 0.0 && coeffs[3] == 0.0) continue;
    const double* brow = b + i * d;
    double y = 0.0;
    for (std::size_t j = 0; j < d; ++j) y += brow[j] * x[j];
    const PolyValue p = horner(coeffs, 3, y);
    total += brow[i] * p.slope + p.value * score[i];
  }
  return total;
}

std::string RotatedPolyFamily::layout() const {
  return "a row-major d x 4 (a_i0..a_i3), then B row-major d x d";
}

// --- basket_exp ------------------------------------------------------------

namespace {
std::size_t basket_dim(const DensityPtr& density, int variant) {
  if (variant != 1 && variant != 2) throw std::invalid_argument("basket_exp: variant must be 1 or 2");
  const auto parts = require_marginals(density, "basket_exp");
  for (const auto& p : parts) {
    if (p->kind() != DensityKind::LogNormal) {
      throw std::invalid_argument("basket_exp: every coordinate must be log-normal");
    }
  }
  return parts.size() * (variant == 1 ? 2 : 3);
}
}  // namespace

BasketExpFamily::BasketExpFamily(DensityPtr density, int variant)
    : CvFamily(variant == 1 ? "basket_exp1" : "basket_exp2", density, basket_dim(density, variant), false),
      variant_(variant) {}

double BasketExpFamily::eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const {
  const std::size_t block = block_size();
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double* c = a.data() + i * block;
    if (c[0] == 0.0) continue;
    if (!(x[i] > 0.0)) throw OutOfSupport("basket_exp: non-positive coordinate");
    const double lx = std::log(x[i]);
    const double quad = variant_ == 2 ? c[2] : 0.0;
    const double phi = c[0] * std::exp(c[1] * lx + quad * lx * lx);
    const double slope = phi * (c[1] + 2.0 * quad * lx) / x[i];
    total += slope + phi * score[i];
  }
  return total;
}

std::string BasketExpFamily::layout() const {
  return variant_ == 1 ? "per-asset blocks (a_i0, a_i1)" : "per-asset blocks (a_i0, a_i1, a_i2)";
}

// --- factories -------------------------------------------------------------

std::shared_ptr<const Poly1dFamily> poly1d_family(DensityPtr density, std::size_t degree) {
  return std::make_shared<const Poly1dFamily>(std::move(density), degree);
}

std::shared_ptr<const AdditivePolyFamily> additive_poly_family(DensityPtr density, std::size_t degree) {
  return std::make_shared<const AdditivePolyFamily>(std::move(density), degree);
}

std::shared_ptr<const GaussianHermiteFamily> gaussian_hermite_family(DensityPtr density) {
  return std::make_shared<const GaussianHermiteFamily>(std::move(density));
}

std::shared_ptr<const RotatedPolyFamily> rotated_poly_family(DensityPtr density) {
  return std::make_shared<const RotatedPolyFamily>(std::move(density));
}

std::shared_ptr<const BasketExpFamily> basket_exp_family(DensityPtr density, int variant) {
  return std::make_shared<const BasketExpFamily>(std::move(density), variant);
}

std::shared_ptr<const BasketExpFamily> basket_exp_family(std::vector<DensityPtr> assets, int variant) {
  return basket_exp_family(product_density(std::move(assets)), variant);
}

CvFamilyPtr make_family(std::string_view family_id, DensityPtr density) {
  if (family_id == "poly1d") return poly1d_family(std::move(density));
  if (family_id == "additive_poly") return additive_poly_family(std::move(density));
  if (family_id == "gauss_hermite") return gaussian_hermite_family(std::move(density));
  if (family_id == "rotated_poly") return rotated_poly_family(std::move(density));
  if (family_id == "basket_exp1") return basket_exp_family(std::move(density), 1);
  if (family_id == "basket_exp2") return basket_exp_family(std::move(density), 2);
  throw std::invalid_argument("unknown family id '" + std::string(family_id) + "'");
}

// --- generic operator ------------------------------------------------------

std::function<double(ConstPoint)> first_order_stein(DensityPtr density, VectorField phi) {
  if (!density) throw std::invalid_argument("first_order_stein: density is null");
  if (!phi.value || !phi.partial) throw std::invalid_argument("first_order_stein: incomplete vector field");
  return [density = std::move(density), phi = std::move(phi)](ConstPoint x) {
    const Vector s = density->score(x);
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      total += phi.partial(i, x) + phi.value(i, x) * s[static_cast<Eigen::Index>(i)];
    }
    return total;
  };
}

MeanEstimate cv_mean_check(const CvFamily& family, std::span<const double> a, std::size_t n,
                           std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("cv_mean_check: n must be at least 2");
  const auto pinned = family.admissible(a);
  const Dataset data = family.density().sample(n, seed);
  const ScoredSample scored = kernels::score_sample(family.density(), data);
  std::vector<double> values(n);
  kernels::zeta_values(family, pinned, scored, values);
  MeanEstimate out;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : values) {
    sum += v;
    sum_sq += v * v;
  }
  out.mean = sum / static_cast<double>(n);
  out.second_moment = sum_sq / static_cast<double>(n);
  out.std_error = std::sqrt(kernels::empirical_variance(values) / static_cast<double>(n));
  return out;
}

}  // namespace evmcv
