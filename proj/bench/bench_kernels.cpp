#include "evmcv/kernels.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <map>

using namespace evmcv;

namespace {

struct Fixture {
  CvFamilyPtr family;
  Dataset data;
  std::vector<double> a;
  std::vector<double> f_values;
};

// Rotated family on a 10-D Gaussian: the costliest per-row control variate.
const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Fixture fx;
  const auto pi = mvn(random_covariance(10, 1));
  fx.family = rotated_poly_family(pi);
  fx.data = pi->sample(n, 2);
  Rng rng(3);
  fx.a.resize(fx.family->param_dim());
  for (auto& v : fx.a) v = rng.uniform(-0.3, 0.3);
  const Integrand f{"sumexp", [](ConstPoint x) {
                      double s = 0;
                      for (double v : x) s += std::exp(v);
                      return s;
                    }};
  fx.f_values = kernels::serial::integrand_values(f, fx.data);
  return cache.emplace(n, std::move(fx)).first->second;
}

template <bool Parallel>
void BM_ScoreSample(benchmark::State& state) {
  const auto& fx = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto s = Parallel ? kernels::score_sample(fx.family->density(), fx.data)
                      : kernels::serial::score_sample(fx.family->density(), fx.data);
    benchmark::DoNotOptimize(s.scores.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_ReducedValues(benchmark::State& state) {
  const auto& fx = fixture(static_cast<std::size_t>(state.range(0)));
  const ScoredSample sample = kernels::serial::score_sample(fx.family->density(), fx.data);
  std::vector<double> out(fx.data.size());
  for (auto _ : state) {
    if (Parallel) {
      kernels::reduced_values(fx.f_values, *fx.family, fx.a, sample, out);
    } else {
      kernels::serial::reduced_values(fx.f_values, *fx.family, fx.a, sample, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_EmpiricalVariance(benchmark::State& state) {
  const auto& fx = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const double v = Parallel ? kernels::empirical_variance(fx.f_values)
                              : kernels::serial::empirical_variance(fx.f_values);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_BasisMatrix(benchmark::State& state) {
  const auto pi = std_normal(10);
  const auto family = additive_poly_family(pi);
  const Dataset data = pi->sample(static_cast<std::size_t>(state.range(0)), 4);
  const ScoredSample sample = kernels::serial::score_sample(*pi, data);
  for (auto _ : state) {
    auto m = Parallel ? kernels::basis_matrix(*family, sample) : kernels::serial::basis_matrix(*family, sample);
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ScoreSample<false>)->Name("score_sample/serial")->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_ScoreSample<true>)->Name("score_sample/openmp")->Arg(1 << 14)->Arg(1 << 17)->UseRealTime();
BENCHMARK(BM_ReducedValues<false>)->Name("reduced_values/serial")->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_ReducedValues<true>)->Name("reduced_values/openmp")->Arg(1 << 14)->Arg(1 << 17)->UseRealTime();
BENCHMARK(BM_EmpiricalVariance<false>)->Name("empirical_variance/serial")->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_EmpiricalVariance<true>)->Name("empirical_variance/openmp")->Arg(1 << 14)->Arg(1 << 17)->UseRealTime();
BENCHMARK(BM_BasisMatrix<false>)->Name("basis_matrix/serial")->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_BasisMatrix<true>)->Name("basis_matrix/openmp")->Arg(1 << 14)->Arg(1 << 17)->UseRealTime();

BENCHMARK_MAIN();
