#include <benchmark/benchmark.h>

#include "promptcal/calibrators.hpp"
#include "promptcal/sweep.hpp"
#include "promptcal/synth.hpp"

using namespace promptcal;

namespace {

Dataset single(std::size_t k, std::size_t n) {
  SynthConfig cfg;
  cfg.num_classes = k;
  cfg.n_examples = n;
  cfg.noise_scale = 1.0;
  cfg.bias.assign(k, 0.0);
  for (std::size_t j = 1; j < k; ++j) cfg.bias[j] = 1.5 * static_cast<double>(j);
  return generate(cfg);
}

void BM_PriorMatch(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto ds = single(k, static_cast<std::size_t>(state.range(1)));
  const auto prior = TargetPrior::uniform(k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(prior_match_solve(ds.records, prior));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_PriorMatch)->Args({2, 1000})->Args({3, 1000})->Args({3, 10000});

void BM_OptimalSearch(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto ds = single(k, static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_weight_search(ds.records, k));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_OptimalSearch)->Args({2, 1000})->Args({3, 1000})->Args({4, 1000});

void BM_Sweep(benchmark::State& state) {
  SuiteConfig cfg;
  cfg.n_examples = 500;
  const auto ds = generate_suite(cfg).dataset;
  const std::vector<Method> all{std::begin(kAllMethods), std::end(kAllMethods)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sweep_dataset(ds, all, TargetPrior::uniform(2),
                      static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
