#include "evmcv/fit.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace evmcv {

std::string_view to_string(FitMethod method) noexcept {
  switch (method) {
    case FitMethod::EvmLinear:
      return "EVM_LINEAR";
    case FitMethod::EvmNonlinear:
      return "EVM_NONLINEAR";
    case FitMethod::LsLinear:
      return "LS_LINEAR";
  }
  return "?";
}

// --- objective -------------------------------------------------------------

EvmObjective::EvmObjective(const Integrand& f, const CvFamily& family, const Dataset& data)
    : family_(&family),
      sample_(kernels::score_sample(family.density(), data)),
      f_values_(kernels::integrand_values(f, data)) {}

double EvmObjective::operator()(std::span<const double> a) const {
  const auto pinned = family_->admissible(a);
  return evaluate_admissible(pinned);
}

double EvmObjective::evaluate_admissible(std::span<const double> a) const {
  std::vector<double> g(f_values_.size());
  kernels::reduced_values(f_values_, *family_, a, sample_, g);
  return kernels::empirical_variance(g);
}

double objective(const Integrand& f, const CvFamily& family, std::span<const double> a, const Dataset& data) {
  return EvmObjective(f, family, data)(a);
}

// --- linear fits -----------------------------------------------------------

namespace {

std::vector<std::size_t> free_indices(const CvFamily& family) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < family.param_dim(); ++k) {
    if (!family.constraint_mask()[k]) out.push_back(k);
  }
  return out;
}

void require_linear(const CvFamily& family, const char* who) {
  if (!family.is_linear()) {
    throw std::invalid_argument(std::string(who) + ": family '" + family.family_id() + "' is not linear");
  }
}

// Design restricted to the free parameters.
Matrix free_design(const RowMatrix& basis, const std::vector<std::size_t>& free) {
  Matrix h(basis.rows(), static_cast<Eigen::Index>(free.size()));
  for (std::size_t c = 0; c < free.size(); ++c) {
    h.col(static_cast<Eigen::Index>(c)) = basis.col(static_cast<Eigen::Index>(free[c]));
  }
  return h;
}

struct NormalSolution {
  Vector x;
  bool ridge_used = false;
};

// Solves gram * x = rhs with unit-diagonal scaling. Columns with zero
// diagonal carry no information and get x = 0. If the scaled system is
// numerically singular a ridge of 1e-10 * trace(gram) / m is added once.
NormalSolution solve_normal_equations(const Matrix& gram, const Vector& rhs) {
  const Eigen::Index m = gram.rows();
  NormalSolution out{Vector::Zero(m), false};
  std::vector<Eigen::Index> active;
  const double max_diag = m > 0 ? gram.diagonal().maxCoeff() : 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (gram(k, k) > max_diag * 1e-300 && gram(k, k) > 0.0) active.push_back(k);
  }
  const auto na = static_cast<Eigen::Index>(active.size());
  if (na == 0) return out;

  Matrix g(na, na);
  Vector r(na);
  Vector scale(na);
  for (Eigen::Index i = 0; i < na; ++i) {
    scale[i] = 1.0 / std::sqrt(gram(active[i], active[i]));
    r[i] = rhs[active[i]] * scale[i];
  }
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) g(i, j) = gram(active[i], active[j]) * scale[i] * scale[j];
  }

  auto attempt = [&](const Matrix& system) -> std::optional<Vector> {
    Eigen::LDLT<Matrix> ldlt(system);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14) return std::nullopt;
    Vector z = ldlt.solve(r);
    if (!z.allFinite()) return std::nullopt;
    return z;
  };

  auto z = attempt(g);
  if (!z) {
    double trace = 0.0;
    for (Eigen::Index i = 0; i < na; ++i) trace += gram(active[i], active[i]);
    const double lambda = 1e-10 * trace / static_cast<double>(na);
    Matrix ridged = g;
    for (Eigen::Index i = 0; i < na; ++i) ridged(i, i) += lambda * scale[i] * scale[i];
    Eigen::LDLT<Matrix> ldlt(ridged);
    if (ldlt.info() == Eigen::Success) {
      Vector candidate = ldlt.solve(r);
      if (candidate.allFinite()) z = std::move(candidate);
    }
    if (!z) throw FitError("normal equations are singular even after ridge regularization");
    out.ridge_used = true;
  }
  for (Eigen::Index i = 0; i < na; ++i) out.x[active[i]] = (*z)[i] * scale[i];
  return out;
}

}  // namespace

FitResult evm_fit_linear(const Integrand& f, const CvFamily& family, const Dataset& data) {
  require_linear(family, "evm_fit_linear");
  if (data.size() < 2) throw FitError("evm_fit_linear: need at least 2 points");
  const EvmObjective obj(f, family, data);
  const auto free = free_indices(family);
  Matrix h = free_design(kernels::basis_matrix(family, obj.sample()), free);
  Eigen::Map<const Vector> fv(obj.f_values().data(), static_cast<Eigen::Index>(obj.f_values().size()));

  const Eigen::RowVectorXd mean = h.colwise().mean();
  h.rowwise() -= mean;
  const Vector fc = fv.array() - fv.mean();
  const NormalSolution sol = solve_normal_equations(h.transpose() * h, h.transpose() * fc);

  FitResult out;
  out.method = FitMethod::EvmLinear;
  out.a_hat.assign(family.param_dim(), 0.0);
  for (std::size_t c = 0; c < free.size(); ++c) out.a_hat[free[c]] = sol.x[static_cast<Eigen::Index>(c)];
  out.start_point.assign(family.param_dim(), 0.0);
  out.objective = obj.evaluate_admissible(out.a_hat);
  out.converged = true;
  out.ridge_used = sol.ridge_used;
  return out;
}

FitResult ls_fit_linear(const Integrand& f, const CvFamily& family, const Dataset& data) {
  require_linear(family, "ls_fit_linear");
  if (data.size() < 2) throw FitError("ls_fit_linear: need at least 2 points");
  const EvmObjective obj(f, family, data);
  const auto free = free_indices(family);
  const Matrix h = free_design(kernels::basis_matrix(family, obj.sample()), free);
  Eigen::Map<const Vector> fv(obj.f_values().data(), static_cast<Eigen::Index>(obj.f_values().size()));
  const NormalSolution sol = solve_normal_equations(h.transpose() * h, h.transpose() * fv);

  FitResult out;
  out.method = FitMethod::LsLinear;
  out.a_hat.assign(family.param_dim(), 0.0);
  for (std::size_t c = 0; c < free.size(); ++c) out.a_hat[free[c]] = sol.x[static_cast<Eigen::Index>(c)];
  out.start_point.assign(family.param_dim(), 0.0);
  out.objective = (fv - h * sol.x).squaredNorm();
  out.converged = true;
  out.ridge_used = sol.ridge_used;
  return out;
}

// --- nonlinear fit ---------------------------------------------------------

FitResult evm_fit_nonlinear(const Integrand& f, const CvFamily& family, const Dataset& data,
                            std::span<const double> start, const SearchOptions& opts) {
  const EvmObjective obj(f, family, data);
  return evm_fit_nonlinear(obj, start, opts);
}

FitResult evm_fit_nonlinear(const EvmObjective& objective, std::span<const double> start,
                            const SearchOptions& opts) {
  const CvFamily& family = objective.family();
  if (opts.max_iterations == 0 || opts.restarts == 0 || !(opts.tolerance > 0.0)) {
    throw std::invalid_argument("search options must have positive limits");
  }
  auto full = family.admissible(start);
  const auto free = free_indices(family);

  SimplexOptions so;
  so.max_iterations = opts.max_iterations;
  so.tolerance = opts.tolerance;
  so.initial_step = opts.initial_step;
  std::vector<std::pair<double, double>> box;
  for (std::size_t k : free) {
    if (opts.parameter_box) {
      if (opts.parameter_box->size() != family.param_dim()) {
        throw std::invalid_argument("parameter_box size does not match the family");
      }
      box.push_back((*opts.parameter_box)[k]);
    } else {
      box.emplace_back(-opts.default_box, opts.default_box);
    }
  }
  so.box = box;
  for (std::size_t c = 0; c < free.size(); ++c) full[free[c]] = std::clamp(full[free[c]], box[c].first, box[c].second);

  FitResult out;
  out.method = FitMethod::EvmNonlinear;
  out.start_point = full;

  const double start_value = objective.evaluate_admissible(full);
  if (!std::isfinite(start_value)) throw FitError("objective is not finite at the start point");

  std::vector<double> work = full;
  const Objective reduced = [&](std::span<const double> z) {
    for (std::size_t c = 0; c < free.size(); ++c) work[free[c]] = z[c];
    return objective.evaluate_admissible(work);
  };

  std::vector<double> z(free.size());
  for (std::size_t c = 0; c < free.size(); ++c) z[c] = full[free[c]];
  double best = start_value;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    SimplexResult res = nelder_mead(reduced, z, so);
    out.iterations += res.iterations;
    out.converged = res.converged;
    if (res.value <= best) {
      best = res.value;
      z = std::move(res.x);
    }
  }
  out.a_hat = full;
  for (std::size_t c = 0; c < free.size(); ++c) out.a_hat[free[c]] = z[c];
  out.objective = objective.evaluate_admissible(out.a_hat);
  return out;
}

// --- gradients -------------------------------------------------------------

std::vector<double> finite_difference_gradient(const Integrand& f, const CvFamily& family,
                                               std::span<const double> a, const Dataset& data, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  const EvmObjective obj(f, family, data);
  auto point = family.admissible(a);
  std::vector<double> grad(point.size(), 0.0);
  for (std::size_t k = 0; k < point.size(); ++k) {
    if (family.constraint_mask()[k]) continue;
    const double saved = point[k];
    point[k] = saved + step;
    const double up = obj.evaluate_admissible(point);
    point[k] = saved - step;
    const double down = obj.evaluate_admissible(point);
    point[k] = saved;
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

std::vector<double> linear_objective_gradient(const Integrand& f, const CvFamily& family,
                                              std::span<const double> a, const Dataset& data) {
  require_linear(family, "linear_objective_gradient");
  const EvmObjective obj(f, family, data);
  RowMatrix basis = kernels::basis_matrix(family, obj.sample());
  Matrix h = basis;
  const Eigen::RowVectorXd mean = h.colwise().mean();
  h.rowwise() -= mean;
  Eigen::Map<const Vector> fv(obj.f_values().data(), static_cast<Eigen::Index>(obj.f_values().size()));
  const Vector fc = fv.array() - fv.mean();
  const auto pinned = family.admissible(a);
  Eigen::Map<const Vector> av(pinned.data(), static_cast<Eigen::Index>(pinned.size()));
  const double denom = static_cast<double>(data.size() - 1);
  const Vector grad = 2.0 * (h.transpose() * (h * av) - h.transpose() * fc) / denom;
  std::vector<double> out(grad.data(), grad.data() + grad.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (family.constraint_mask()[k]) out[k] = 0.0;
  }
  return out;
}

// --- basket start ----------------------------------------------------------

std::vector<double> basket_start_point(std::span<const Integrand> f_1d, const BasketExpFamily& family,
                                       const Dataset& data, const SearchOptions& opts) {
  const auto assets = family.density().marginals();
  if (f_1d.size() != assets.size()) throw std::invalid_argument("basket_start_point: one payoff per asset required");
  if (data.dim() != assets.size()) throw std::invalid_argument("basket_start_point: dataset dimension mismatch");
  const std::size_t block = family.block_size();
  std::vector<double> start(family.param_dim(), 0.0);

  static constexpr double kScaleGrid[] = {-1.0, -0.5, 0.5, 1.0};
  static constexpr double kExponentGrid[] = {0.5, 1.0, 2.0};

  for (std::size_t i = 0; i < assets.size(); ++i) {
    try {
      const auto one = basket_exp_family(assets[i], family.variant());
      const Dataset col = column(data, i);
      const EvmObjective obj(f_1d[i], *one, col);
      double best = std::numeric_limits<double>::infinity();
      std::vector<double> best_a;
      for (double scale : kScaleGrid) {
        for (double exponent : kExponentGrid) {
          std::vector<double> a0(block, 0.0);
          a0[0] = scale;
          a0[1] = exponent;
          try {
            const FitResult fit = evm_fit_nonlinear(obj, a0, opts);
            if (fit.objective < best) {
              best = fit.objective;
              best_a = fit.a_hat;
            }
          } catch (const FitError&) {
            // This grid start has a non-finite objective; try the next one.
          }
        }
      }
      if (!best_a.empty()) std::copy(best_a.begin(), best_a.end(), start.begin() + static_cast<std::ptrdiff_t>(i * block));
    } catch (const std::exception&) {
      // Leave the zero block for this asset.
    }
  }
  return start;
}

Matrix sample_covariance(const Dataset& data) {
  if (data.size() < 2) throw std::invalid_argument("sample covariance needs at least 2 points");
  Matrix centered = data.points;
  const Eigen::RowVectorXd mean = centered.colwise().mean();
  centered.rowwise() -= mean;
  return centered.transpose() * centered / static_cast<double>(data.size() - 1);
}

}  // namespace evmcv
