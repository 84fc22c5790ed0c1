#include "evmcv/quadrature.hpp"

#include <array>
#include <cmath>

namespace evmcv {

namespace {

struct Panel {
  double a, fa, m, fm, b, fb, whole;
};

double simpson(double a, double fa, double fm, double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

void refine(const std::function<double(double)>& fn, const Panel& p, double abs_tol, double rel_tol,
            int depth, SimpsonResult& out) {
  const double lm = 0.5 * (p.a + p.m);
  const double rm = 0.5 * (p.m + p.b);
  const double flm = fn(lm);
  const double frm = fn(rm);
  out.evaluations += 2;
  const double left = simpson(p.a, p.fa, flm, p.m, p.fm);
  const double right = simpson(p.m, p.fm, frm, p.b, p.fb);
  const double both = left + right;
  const double delta = both - p.whole;
  const double tol = std::max(abs_tol, rel_tol * std::abs(both));
  if (std::abs(delta) <= 15.0 * tol || depth <= 0 || !std::isfinite(delta)) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) out.converged = false;
    if (!std::isfinite(delta)) out.converged = false;
    out.value += both + delta / 15.0;
    out.error_estimate += std::abs(delta) / 15.0;
    return;
  }
  refine(fn, {p.a, p.fa, lm, flm, p.m, p.fm, left}, 0.5 * abs_tol, rel_tol, depth - 1, out);
  refine(fn, {p.m, p.fm, rm, frm, p.b, p.fb, right}, 0.5 * abs_tol, rel_tol, depth - 1, out);
}

}  // namespace

SimpsonResult adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double abs_tol,
                               double rel_tol, int max_depth) {
  SimpsonResult out;
  if (a == b) return out;
  const double m = 0.5 * (a + b);
  const double fa = fn(a), fm = fn(m), fb = fn(b);
  out.evaluations = 3;
  refine(fn, {a, fa, m, fm, b, fb, simpson(a, fa, fm, b, fb)}, abs_tol, rel_tol, max_depth, out);
  return out;
}

double gauss_legendre10(const std::function<double(double)>& fn, double a, double b) {
  static constexpr std::array<double, 5> nodes = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                                  0.8650633666889845, 0.9739065285171717};
  static constexpr std::array<double, 5> weights = {0.2955242247147529, 0.2692667193099963,
                                                    0.2190863625159820, 0.1494513491505806,
                                                    0.0666713443086881};
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    sum += weights[k] * (fn(mid - half * nodes[k]) + fn(mid + half * nodes[k]));
  }
  return half * sum;
}

}  // namespace evmcv
