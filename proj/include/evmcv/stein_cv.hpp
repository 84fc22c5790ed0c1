#pragma once

#include "evmcv/distributions.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace evmcv {

/// A scalar function of a point with a stable identifier.
struct Integrand {
  std::string id;
  std::function<double(ConstPoint)> fn;

  double operator()(ConstPoint x) const { return fn(x); }
};

/// Parametric zero-mean control variate zeta_a built from a Stein-type operator.
///
/// Every family evaluates its operator in product-rule form
/// (div phi + phi . grad log pi), so nothing depends on the normalizing
/// constant of the density. Parameters flagged in constraint_mask are pinned
/// to zero before any evaluation.
class CvFamily {
 public:
  virtual ~CvFamily() = default;

  const std::string& family_id() const noexcept { return family_id_; }
  std::size_t param_dim() const noexcept { return mask_.size(); }
  const std::vector<bool>& constraint_mask() const noexcept { return mask_; }
  std::size_t free_param_count() const noexcept;
  bool is_linear() const noexcept { return linear_; }
  int cost_units() const noexcept { return cost_units_; }
  const Density& density() const noexcept { return *density_; }
  const DensityPtr& density_ptr() const noexcept { return density_; }

  /// Copy of a with masked entries set to zero; throws on size mismatch.
  std::vector<double> admissible(std::span<const double> a) const;

  /// zeta_a(x); validates the point and applies the mask.
  double eval(std::span<const double> a, ConstPoint x) const;

  /// zeta_a(x) given the density score at x; a must already be admissible.
  virtual double eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const = 0;

  /// Linear families only: eta_k(x) with zeta_a(x) = sum_k a_k eta_k(x).
  virtual void basis_with_score(ConstPoint x, ConstPoint score, std::span<double> out) const;
  std::vector<double> basis(ConstPoint x) const;

  /// One-line description of the flat parameter layout.
  virtual std::string layout() const = 0;

 protected:
  CvFamily(std::string family_id, DensityPtr density, std::size_t param_dim, bool linear);
  void pin(std::size_t k) { mask_.at(k) = true; }

 private:
  std::string family_id_;
  DensityPtr density_;
  std::vector<bool> mask_;
  bool linear_;
  // One evaluation of the product rule: a derivative of a product.
  int cost_units_ = 2;
};

using CvFamilyPtr = std::shared_ptr<const CvFamily>;

/// 1-D polynomial field phi(x) = sum_k a_k x^k.
/// Layout: (a_0, ..., a_degree). a_0 is pinned for Exp(1).
class Poly1dFamily final : public CvFamily {
 public:
  Poly1dFamily(DensityPtr density, std::size_t degree);
  double eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const override;
  void basis_with_score(ConstPoint x, ConstPoint score, std::span<double> out) const override;
  std::string layout() const override;

 private:
  std::size_t degree_;
};

/// Coordinate-wise polynomial fields phi_i(x_i) on a product density.
/// Layout: row-major (a_i0..a_i,degree) per coordinate i.
class AdditivePolyFamily final : public CvFamily {
 public:
  AdditivePolyFamily(DensityPtr density, std::size_t degree);
  double eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const override;
  void basis_with_score(ConstPoint x, ConstPoint score, std::span<double> out) const override;
  std::string layout() const override;

 private:
  std::size_t degree_;
};

/// sum_i a_i d_i pi / pi + sum_{i<=j} a_ij d_i d_j pi / pi.
/// Layout: (a_1..a_d) then a_ij for i <= j, i outer.
class GaussianHermiteFamily final : public CvFamily {
 public:
  explicit GaussianHermiteFamily(DensityPtr density);
  double eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const override;
  void basis_with_score(ConstPoint x, ConstPoint score, std::span<double> out) const override;
  std::string layout() const override;
};

/// Cubic fields evaluated at a linear transform of the point:
/// zeta(x) = sum_i [B_ii phi_i'((Bx)_i) + phi_i((Bx)_i) score_i(x)].
/// Layout: a row-major (d x 4), then B row-major (d x d).
class RotatedPolyFamily final : public CvFamily {
 public:
  explicit RotatedPolyFamily(DensityPtr density);
  double eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const override;
  std::string layout() const override;

  std::size_t b_offset() const noexcept { return 4 * density().dim(); }
};

/// phi_i(x) = a_i0 exp(a_i1 ln x + a_i2 ln^2 x) per log-normal coordinate.
/// Layout: per-asset blocks (a_i0, a_i1[, a_i2]).
class BasketExpFamily final : public CvFamily {
 public:
  BasketExpFamily(DensityPtr density, int variant);
  double eval_with_score(std::span<const double> a, ConstPoint x, ConstPoint score) const override;
  std::string layout() const override;

  int variant() const noexcept { return variant_; }
  std::size_t block_size() const noexcept { return variant_ == 1 ? 2 : 3; }

 private:
  int variant_;
};

std::shared_ptr<const Poly1dFamily> poly1d_family(DensityPtr density, std::size_t degree = 3);
std::shared_ptr<const AdditivePolyFamily> additive_poly_family(DensityPtr density, std::size_t degree = 3);
std::shared_ptr<const GaussianHermiteFamily> gaussian_hermite_family(DensityPtr density);
std::shared_ptr<const RotatedPolyFamily> rotated_poly_family(DensityPtr density);
std::shared_ptr<const BasketExpFamily> basket_exp_family(DensityPtr density, int variant);
std::shared_ptr<const BasketExpFamily> basket_exp_family(std::vector<DensityPtr> assets, int variant);

/// Builds a family from its config id ("poly1d", "additive_poly", "gauss_hermite",
/// "rotated_poly", "basket_exp1", "basket_exp2").
CvFamilyPtr make_family(std::string_view family_id, DensityPtr density);

/// A vector field given coordinate-wise: phi_i(x) and d phi_i / d x_i.
struct VectorField {
  std::function<double(std::size_t, ConstPoint)> value;
  std::function<double(std::size_t, ConstPoint)> partial;
};

/// x -> sum_i [d_i phi_i(x) + phi_i(x) score_i(x)].
std::function<double(ConstPoint)> first_order_stein(DensityPtr density, VectorField phi);

/// g = f - zeta_a; has the same expectation as f for admissible a.
struct DifferenceFunction {
  Integrand f;
  CvFamilyPtr family;
  std::vector<double> a;

  double operator()(ConstPoint x) const { return f(x) - family->eval(a, x); }
};

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double second_moment = 0.0;
};

/// Monte Carlo mean and standard error of zeta_a over n fresh draws.
MeanEstimate cv_mean_check(const CvFamily& family, std::span<const double> a, std::size_t n,
                           std::uint64_t seed);

}  // namespace evmcv
