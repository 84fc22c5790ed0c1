#include "evmcv/kernels.hpp"
#include "evmcv/verify.hpp"

#include <doctest.h>
#include <omp.h>

#include <cmath>

using namespace evmcv;

namespace {

struct ThreadCount {
  int saved = omp_get_max_threads();
  explicit ThreadCount(int n) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("OpenMP kernels match the serial reference") {
  const ThreadCount threads(4);
  for (const auto& fam : reference_families(2)) {
    CAPTURE(fam->family_id());
    // Odd size, several reduction chunks, and a partial last sampling block.
    const Dataset d = fam->density().sample(3 * kernels::kReductionChunk + 123, 8);
    const ScoredSample par = kernels::score_sample(fam->density(), d);
    const ScoredSample ser = kernels::serial::score_sample(fam->density(), d);
    CHECK(par.scores == ser.scores);

    const Integrand f{"sumsq", [](ConstPoint x) {
                        double s = 0;
                        for (double v : x) s += v * v;
                        return s;
                      }};
    const auto fv = kernels::integrand_values(f, d);
    CHECK(fv == kernels::serial::integrand_values(f, d));

    Rng rng(4);
    const auto a = fam->admissible(random_parameters(*fam, rng));
    std::vector<double> zp(d.size()), zs(d.size()), gp(d.size()), gs(d.size());
    kernels::zeta_values(*fam, a, par, zp);
    kernels::serial::zeta_values(*fam, a, ser, zs);
    CHECK(zp == zs);
    kernels::reduced_values(fv, *fam, a, par, gp);
    kernels::serial::reduced_values(fv, *fam, a, ser, gs);
    CHECK(gp == gs);
    // Chunked and single-pass accumulation differ only by rounding.
    CHECK(kernels::empirical_variance(gp) ==
          doctest::Approx(kernels::serial::empirical_variance(gs)).epsilon(1e-12));

    if (fam->is_linear()) CHECK(kernels::basis_matrix(*fam, par) == kernels::serial::basis_matrix(*fam, ser));
  }
}

TEST_CASE("empirical variance does not depend on the thread count") {
  Rng rng(1);
  std::vector<double> v(50001);
  for (auto& x : v) x = 3.0 + rng.normal();
  double one, many;
  {
    const ThreadCount t(1);
    one = kernels::empirical_variance(v);
  }
  {
    const ThreadCount t(7);
    many = kernels::empirical_variance(v);
  }
  CHECK(one == many);
}

TEST_CASE("score_sample rejects a row outside the support") {
  const auto pi = exponential_unit();
  Dataset d = pi->sample(10, 1);
  d.points(4, 0) = -0.5;
  CHECK_THROWS_AS(kernels::score_sample(*pi, d), OutOfSupport);
  CHECK_THROWS_AS(kernels::serial::score_sample(*pi, d), OutOfSupport);
}
