#include "evmcv/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace evmcv;

TEST_CASE("adaptive Simpson on smooth integrands") {
  const auto r = adaptive_simpson([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-12);
  CHECK(r.converged);
  CHECK(std::abs(r.value - 2.0) < 1e-11);
  const auto g = adaptive_simpson([](double x) { return std::exp(-0.5 * x * x); }, -10, 10, 1e-12);
  CHECK(std::abs(g.value - std::sqrt(2 * std::numbers::pi)) < 1e-11);
}

TEST_CASE("Simpson is exact for cubics") {
  const auto r = adaptive_simpson([](double x) { return 4 * x * x * x - x + 2; }, -1.0, 3.0, 1e-14);
  CHECK(r.value == doctest::Approx(80.0 - 4.0 + 8.0).epsilon(1e-14));
  CHECK(r.evaluations <= 9);
}

TEST_CASE("a kink needs more panels but still converges") {
  const auto r = adaptive_simpson([](double x) { return std::abs(x - 0.3); }, -1.0, 1.0, 1e-10);
  CHECK(r.converged);
  CHECK(std::abs(r.value - (1.3 * 1.3 + 0.7 * 0.7) / 2) < 1e-9);
}

TEST_CASE("depth limit is reported") {
  const auto r = adaptive_simpson([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-14, 0.0, 6);
  CHECK_FALSE(r.converged);
}

TEST_CASE("Gauss-Legendre 10 is exact up to degree 19") {
  const auto p = [](double x) { return std::pow(x, 19) + 3 * std::pow(x, 18) - x; };
  const double exact = (std::pow(2.0, 20) - 1) / 20 + 3 * (std::pow(2.0, 19) + 1) / 19 - (4.0 - 1.0) / 2;
  CHECK(gauss_legendre10(p, -1.0, 2.0) == doctest::Approx(exact).epsilon(1e-13));
}
