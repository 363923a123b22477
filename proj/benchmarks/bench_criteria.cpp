// Apache License, Version 2.0, refer to LICENSE.txt
#include <benchmark/benchmark.h>

#include <random>

#include "infocrit/criteria.hpp"
#include "infocrit/numerics.hpp"
#include "infocrit/psis.hpp"

namespace {

using namespace infocrit;

Eigen::MatrixXd loglik_matrix(long long s, long long j) {
  std::mt19937 gen(12345);
  std::normal_distribution<double> norm(-1.0, 0.5);
  Eigen::MatrixXd m(s, j);
  for (long long r = 0; r < s; ++r)
    for (long long c = 0; c < j; ++c) m(r, c) = norm(gen);
  return m;
}

void bm_dic_family(benchmark::State& state) {
  const PointwiseLogLik ll(loglik_matrix(state.range(0), state.range(1)));
  const DevianceDraws dev = deviance_from_pointwise(ll);
  for (auto _ : state)
    benchmark::DoNotOptimize(dic_family(dev, 100.0).dic_i);
}
BENCHMARK(bm_dic_family)
    ->Args({4000, 400})
    ->Args({4000, 800})
    ->Args({4000, 1600})
    ->Unit(benchmark::kMicrosecond);

void bm_waic(benchmark::State& state) {
  const PointwiseLogLik ll(loglik_matrix(state.range(0), state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(waic(ll).waic);
}
BENCHMARK(bm_waic)
    ->Args({4000, 400})
    ->Args({4000, 800})
    ->Args({4000, 1600})
    ->Unit(benchmark::kMillisecond);

void bm_psis_loo(benchmark::State& state) {
  const PointwiseLogLik ll(loglik_matrix(state.range(0), state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(psis_loo(ll).loo);
}
BENCHMARK(bm_psis_loo)
    ->Args({4000, 400})
    ->Args({4000, 800})
    ->Args({4000, 1600})
    ->Unit(benchmark::kMillisecond);

void bm_log_sum_exp(benchmark::State& state) {
  std::mt19937 gen(7);
  std::normal_distribution<double> norm;
  std::vector<double> v(state.range(0));
  for (double& x : v) x = norm(gen);
  for (auto _ : state) benchmark::DoNotOptimize(log_sum_exp(v));
}
BENCHMARK(bm_log_sum_exp)->Arg(4000)->Unit(benchmark::kMicrosecond);

void bm_gpd_fit(benchmark::State& state) {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> unif;
  std::vector<double> tail(state.range(0));
  for (double& x : tail) x = (std::pow(1.0 - unif(gen), -0.3) - 1.0) / 0.3;
  std::sort(tail.begin(), tail.end());
  for (auto _ : state) benchmark::DoNotOptimize(fit_gpd_tail(tail));
}
BENCHMARK(bm_gpd_fit)->Arg(190)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
