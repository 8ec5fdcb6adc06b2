#include <benchmark/benchmark.h>

#include "sunn/leaky.hpp"
#include "sunn/popout.hpp"
#include "sunn/smart_neuron.hpp"
#include "sunn/synthetic.hpp"
#include "sunn/topology.hpp"

using namespace sunn;

namespace {

GridDims square_dims(const benchmark::State& state) {
  const auto side = static_cast<std::uint32_t>(state.range(0));
  return {side, side};
}

void BM_Topology(benchmark::State& state) {
  const auto dims = square_dims(state);
  TopologyConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(build_random_topology(dims, cfg));
  state.SetItemsProcessed(state.iterations() * std::int64_t(dims.size()));
}
BENCHMARK(BM_Topology)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Weights(benchmark::State& state) {
  const auto dims = square_dims(state);
  const auto signals = synthetic::random_field(dims, 1, 1);
  const auto topo = build_random_topology(dims, {});
  for (auto _ : state) benchmark::DoNotOptimize(compute_weights(signals, topo, {}));
  state.SetItemsProcessed(state.iterations() * std::int64_t(dims.size()));
}
BENCHMARK(BM_Weights)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Normalize(benchmark::State& state) {
  const auto dims = square_dims(state);
  const auto topo = build_random_topology(dims, {});
  const auto weights = compute_weights(synthetic::random_field(dims, 1, 1), topo, {});
  LeakConfig cfg;
  cfg.symmetrization = static_cast<Symmetrization>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(normalize_weights(weights, topo, cfg));
}
BENCHMARK(BM_Normalize)->Args({256, 0})->Args({256, 2})->Unit(benchmark::kMillisecond);

void BM_LeakyStep(benchmark::State& state) {
  const auto dims = square_dims(state);
  const auto topo = build_random_topology(dims, {});
  const auto weights = compute_weights(synthetic::random_field(dims, 1, 1), topo, {});
  const auto kernel = normalize_weights(weights, topo, {});
  ScalarField v(dims, 1.0);
  const auto threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) {
    v = leaky_step(kernel, v, 0.5, threads);
    benchmark::DoNotOptimize(v.values.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(dims.size()));
}
BENCHMARK(BM_LeakyStep)->Args({256, 1})->Args({512, 1})->Args({512, 4})->Unit(benchmark::kMillisecond);

void BM_Thresholds(benchmark::State& state) {
  const auto dims = square_dims(state);
  ScalarField field(dims);
  const auto noise = synthetic::random_field(dims, 1, 3);
  for (std::size_t k = 0; k < field.size(); ++k) field[k] = (k % 3) * 0.3 + 0.05 * noise.values[k];
  for (auto _ : state) benchmark::DoNotOptimize(find_thresholds(histogram(field, 64), 3));
}
BENCHMARK(BM_Thresholds)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_OtsuCuts(benchmark::State& state) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = (i * 7919) % 101;
  for (auto _ : state) benchmark::DoNotOptimize(otsu_cuts(counts, 3));
}
BENCHMARK(BM_OtsuCuts)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
