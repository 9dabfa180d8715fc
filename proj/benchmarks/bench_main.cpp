#include <benchmark/benchmark.h>

#include <cmath>

#include "apkit/arith.hpp"
#include "apkit/gowers.hpp"
#include "apkit/random.hpp"
#include "apkit/transference.hpp"

namespace {

apkit::GridFunction random_function(std::uint64_t N, std::uint64_t seed) {
  apkit::Rng rng(seed, 0);
  std::vector<double> v(N);
  for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
  return apkit::GridFunction(apkit::CyclicGroup(N), std::move(v));
}

void BM_Sieve(benchmark::State& state) {
  const auto limit = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(apkit::build_sieve(limit).primes().size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sieve)->RangeMultiplier(10)->Range(10'000, 10'000'000)->Unit(benchmark::kMillisecond);

void BM_LambdaRTable(benchmark::State& state) {
  const auto limit = static_cast<std::uint64_t>(state.range(0));
  const double R = std::pow(static_cast<double>(limit), 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(apkit::lambda_r_table(limit, R).back());
}
BENCHMARK(BM_LambdaRTable)->RangeMultiplier(10)->Range(10'000, 1'000'000)->Unit(benchmark::kMillisecond);

void BM_GowersU2Exact(benchmark::State& state) {
  const auto f = random_function(static_cast<std::uint64_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(apkit::gowers_norm(f, 2).norm_value);
}
BENCHMARK(BM_GowersU2Exact)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);

void BM_GowersU2Fourier(benchmark::State& state) {
  const auto f = random_function(static_cast<std::uint64_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(apkit::gowers_norm_u2_fourier(f).norm_value);
}
BENCHMARK(BM_GowersU2Fourier)->RangeMultiplier(4)->Range(64, 1 << 16)->Unit(benchmark::kMicrosecond);

void BM_GowersU3MonteCarlo(benchmark::State& state) {
  const auto f = random_function(100'003, 2);
  const auto samples = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(apkit::gowers_norm_mc(f, 3, samples, 7).norm_value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GowersU3MonteCarlo)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

void BM_DualFunction(benchmark::State& state) {
  const auto f = random_function(static_cast<std::uint64_t>(state.range(0)), 3);
  apkit::DualOptions opts;
  opts.mode = state.range(1) == 0 ? apkit::DualMode::exact : apkit::DualMode::fourier;
  for (auto _ : state) benchmark::DoNotOptimize(apkit::dual_function(f, 2, opts)[0]);
}
BENCHMARK(BM_DualFunction)->Args({128, 0})->Args({128, 1})->Args({4096, 1})->Unit(benchmark::kMillisecond);

void BM_CountPrimeAPs(benchmark::State& state) {
  const auto limit = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(apkit::count_prime_aps(3, limit));
}
BENCHMARK(BM_CountPrimeAPs)->RangeMultiplier(10)->Range(1'000, 100'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
