#include "evmcv/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace evmcv {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

struct Vertex {
  std::vector<double> x;
  double f;
};

class Simplex {
 public:
  Simplex(const Objective& objective, const SimplexOptions& opts) : objective_(objective), opts_(opts) {}

  double evaluate(std::vector<double>& x) {
    clip(x);
    ++evaluations_;
    const double v = objective_(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  void clip(std::vector<double>& x) const {
    if (!opts_.box) return;
    const auto& box = *opts_.box;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], box[k].first, box[k].second);
  }

  std::size_t evaluations() const noexcept { return evaluations_; }

 private:
  const Objective& objective_;
  const SimplexOptions& opts_;
  std::size_t evaluations_ = 0;
};

std::vector<double> affine(const std::vector<double>& base, const std::vector<double>& toward, double t) {
  std::vector<double> out(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) out[k] = base[k] + t * (toward[k] - base[k]);
  return out;
}

}  // namespace

SimplexResult nelder_mead(const Objective& objective, std::vector<double> start, const SimplexOptions& opts) {
  const std::size_t n = start.size();
  if (opts.box && opts.box->size() != n) throw std::invalid_argument("nelder_mead: box size mismatch");
  Simplex simplex(objective, opts);
  SimplexResult result;

  std::vector<Vertex> v;
  v.reserve(n + 1);
  {
    Vertex first{start, 0.0};
    first.f = simplex.evaluate(first.x);
    v.push_back(std::move(first));
  }
  if (n == 0) {
    result.x = v[0].x;
    result.value = v[0].f;
    result.converged = true;
    result.evaluations = simplex.evaluations();
    return result;
  }
  for (std::size_t k = 0; k < n; ++k) {
    Vertex vk{v[0].x, 0.0};
    const double step = std::max(opts.initial_step, opts.relative_step * std::abs(v[0].x[k]));
    vk.x[k] += step;
    simplex.clip(vk.x);
    if (vk.x[k] == v[0].x[k]) vk.x[k] -= step;  // pinned against the upper bound
    vk.f = simplex.evaluate(vk.x);
    v.push_back(std::move(vk));
  }

  const auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
  std::stable_sort(v.begin(), v.end(), by_value);

  std::vector<double> centroid(n);
  while (result.iterations < opts.max_iterations) {
    if (v[n].f - v[0].f < opts.tolerance) {
      result.converged = true;
      break;
    }
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += v[i].x[k];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    Vertex& worst = v[n];
    Vertex reflected{affine(centroid, worst.x, -kReflect), 0.0};
    reflected.f = simplex.evaluate(reflected.x);

    bool shrink = false;
    if (reflected.f < v[0].f) {
      Vertex expanded{affine(centroid, reflected.x, kExpand), 0.0};
      expanded.f = simplex.evaluate(expanded.x);
      worst = expanded.f < reflected.f ? std::move(expanded) : std::move(reflected);
    } else if (reflected.f < v[n - 1].f) {
      worst = std::move(reflected);
    } else if (reflected.f < worst.f) {
      Vertex outside{affine(centroid, reflected.x, kContract), 0.0};
      outside.f = simplex.evaluate(outside.x);
      if (outside.f <= reflected.f) {
        worst = std::move(outside);
      } else {
        shrink = true;
      }
    } else {
      Vertex inside{affine(centroid, worst.x, kContract), 0.0};
      inside.f = simplex.evaluate(inside.x);
      if (inside.f < worst.f) {
        worst = std::move(inside);
      } else {
        shrink = true;
      }
    }

    if (shrink) {
      for (std::size_t i = 1; i <= n; ++i) {
        v[i].x = affine(v[0].x, v[i].x, kShrink);
        v[i].f = simplex.evaluate(v[i].x);
      }
    }
    std::stable_sort(v.begin(), v.end(), by_value);
    result.best_trace.push_back(v[0].f);
  }

  result.x = v[0].x;
  result.value = v[0].f;
  result.evaluations = simplex.evaluations();
  return result;
}

}  // namespace evmcv
