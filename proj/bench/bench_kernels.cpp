#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>
#include <vector>

#include "birthsim/engine.hpp"
#include "birthsim/grid_index.hpp"
#include "birthsim/rates.hpp"
#include "birthsim/rng.hpp"

using namespace birthsim;

namespace {

struct Fixture {
  Configuration config{2};
  GridIndex index{2, 1.0};
  std::vector<double> queries;
};

Fixture make_fixture(std::size_t particles, std::size_t queries) {
  Fixture f;
  CounterRng rng(17, 0);
  const double span = std::sqrt(static_cast<double>(particles));
  for (std::size_t i = 0; i < particles; ++i) {
    const double p[2] = {rng.uniform(-span, span), rng.uniform(-span, span)};
    f.config.add(p);
    f.index.insert(p);
  }
  for (std::size_t i = 0; i < 2 * queries; ++i) f.queries.push_back(rng.uniform(-span - 1.0, span + 1.0));
  return f;
}

const BallSum kBalls = BirthKernel::truncated(5.0, 1.0).balls();

void BM_EvaluateRatesParallel(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::size_t>(state.range(0)), 20000);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_rates(kBalls, f.index, f.queries));
  state.SetItemsProcessed(state.iterations() * 20000);
}

void BM_EvaluateRatesOneThread(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::size_t>(state.range(0)), 20000);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_rates(kBalls, f.index, f.queries));
  omp_set_num_threads(saved);
  state.SetItemsProcessed(state.iterations() * 20000);
}

void BM_EvaluateRatesReference(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::size_t>(state.range(0)), 2000);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_rates_reference(kBalls, f.config, f.queries));
  state.SetItemsProcessed(state.iterations() * 2000);
}

std::uint64_t short_run(std::size_t replica) {
  SimulationOptions opt;
  opt.replica = replica;
  NullSink sink;
  return simulate_streaming(BirthKernel::truncated(2.0, 1.0), Configuration(1, {0.0}), 100.0, 5, sink, opt).events;
}

void BM_ReplicaMap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(replica_map(n, short_run));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ReplicaMapSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(replica_map_serial(n, short_run));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_EvaluateRatesParallel)->Arg(1000)->Arg(20000);
BENCHMARK(BM_EvaluateRatesOneThread)->Arg(1000)->Arg(20000);
BENCHMARK(BM_EvaluateRatesReference)->Arg(1000)->Arg(20000);
BENCHMARK(BM_ReplicaMap)->Arg(8);
BENCHMARK(BM_ReplicaMapSerial)->Arg(8);

BENCHMARK_MAIN();
