// Serial reference against the OpenMP kernels on the same inputs.

#include "deficitlab/kernels.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

using namespace deficit;

namespace {

GaussianMixture bench_mixture(int dim, std::size_t k) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  std::vector<GaussianComponent> comps;
  for (std::size_t i = 0; i < k; ++i) {
    Vec mu(dim);
    for (int j = 0; j < dim; ++j) mu[j] = 2.0 * n(rng);
    Mat a = Mat::Random(dim, dim);
    comps.push_back({1.0 / double(k), mu, a * a.transpose() + Mat::Identity(dim, dim)});
  }
  return GaussianMixture(dim, std::move(comps));
}

std::vector<double> points(std::size_t n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> p(n * std::size_t(dim));
  for (auto& v : p) v = g(rng);
  return p;
}

template <bool Parallel>
void BM_MixtureEval(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  const GaussianMixture m = bench_mixture(2, 16);
  const auto x = points(n, 2, 1);
  std::vector<double> ld(n), sc(2 * n);
  const kernels::MixtureEvalArgs a{m, x, ld, sc};
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::mixture_eval(a);
    else
      kernels::serial::mixture_eval(a);
    benchmark::DoNotOptimize(ld.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(n));
}

template <bool Parallel>
void BM_Softmin(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  const auto x = points(n, 2, 2), y = points(n, 2, 3);
  std::vector<double> g(n, 0.0), log_b(n, -std::log(double(n))), out(n);
  const kernels::SoftminArgs a{x, y, 2, g, log_b, 0.1, out};
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::softmin(a);
    else
      kernels::serial::softmin(a);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(n * n));
}

template <bool Parallel>
void BM_Mehler(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  std::vector<double> vals(2049);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 1.0 + 0.5 * std::sin(-12.0 + 24.0 * double(i) / 2048.0);
  const CubicSpline1d f(vals, -12.0, 24.0 / 2048.0);
  std::vector<double> x(n), out(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -10.0 + 20.0 * double(i) / double(n - 1);
  const kernels::MehlerArgs a{f, x, 0.5, gauss_hermite(128), out};
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::mehler(a);
    else
      kernels::serial::mehler(a);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(n));
}

}  // namespace

BENCHMARK(BM_MixtureEval<false>)->Arg(1 << 14)->Arg(1 << 17)->Name("mixture_eval/serial");
BENCHMARK(BM_MixtureEval<true>)->Arg(1 << 14)->Arg(1 << 17)->Name("mixture_eval/parallel");
BENCHMARK(BM_Softmin<false>)->Arg(256)->Arg(1024)->Name("softmin/serial");
BENCHMARK(BM_Softmin<true>)->Arg(256)->Arg(1024)->Name("softmin/parallel");
BENCHMARK(BM_Mehler<false>)->Arg(1 << 12)->Arg(1 << 14)->Name("mehler/serial");
BENCHMARK(BM_Mehler<true>)->Arg(1 << 12)->Arg(1 << 14)->Name("mehler/parallel");

BENCHMARK_MAIN();
