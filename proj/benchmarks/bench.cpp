#include <benchmark/benchmark.h>

#include "isodiff/gibbs.hpp"
#include "isodiff/posterior.hpp"
#include "isodiff/simulate.hpp"

using namespace isodiff;

namespace {

const Dataset& scenario_dataset() {
  static const Dataset dataset = [] {
    SimulationSpec spec = paper_scenario_spec();
    spec.seed = 1;
    return simulate_dataset(spec).first;
  }();
  return dataset;
}

void BM_ObservationIndexBuild(benchmark::State& state) {
  const Dataset& dataset = scenario_dataset();
  for (auto _ : state) {
    ObservationIndex index(dataset);
    benchmark::DoNotOptimize(index.num_observations());
  }
}
BENCHMARK(BM_ObservationIndexBuild);

void BM_Sweep(benchmark::State& state) {
  const Dataset& dataset = scenario_dataset();
  const ObservationIndex index(dataset);
  const Hyperparameters hyper;
  Rng rng(7, 1);
  ModelState model = initialize_state(index, hyper, InitStrategy::neutral, rng);
  for (auto _ : state) {
    sweep(model, index, hyper, rng);
    benchmark::DoNotOptimize(model.tau);
  }
}
BENCHMARK(BM_Sweep);

void BM_KernelKappa(benchmark::State& state) {
  const Dataset& dataset = scenario_dataset();
  const ObservationIndex index(dataset);
  const Hyperparameters hyper;
  Rng rng(7, 1);
  ModelState model = initialize_state(index, hyper, InitStrategy::neutral, rng);
  for (auto _ : state) sample_kappa(model, index, hyper, rng);
}
BENCHMARK(BM_KernelKappa);

void BM_KernelBeta(benchmark::State& state) {
  const Dataset& dataset = scenario_dataset();
  const ObservationIndex index(dataset);
  const Hyperparameters hyper;
  Rng rng(7, 1);
  ModelState model = initialize_state(index, hyper, InitStrategy::neutral, rng);
  for (auto _ : state) sample_beta(model, index, hyper, rng);
}
BENCHMARK(BM_KernelBeta);

void BM_DETable(benchmark::State& state) {
  const Dataset& dataset = scenario_dataset();
  ChainConfig config;
  config.burn_in = 50;
  config.keep = 200;
  config.thin = 2;
  config.num_chains = 2;
  const ChainOutput output = run_chains(dataset, Hyperparameters{}, config);
  for (auto _ : state) {
    const auto table = de_result_table(output);
    benchmark::DoNotOptimize(table.size());
  }
}
BENCHMARK(BM_DETable);

}  // namespace

BENCHMARK_MAIN();
