#include <benchmark/benchmark.h>

#include <vector>

#include "ivregime/bounds.hpp"
#include "ivregime/dataset.hpp"
#include "ivregime/estimator.hpp"
#include "ivregime/model.hpp"

using namespace ivregime;

namespace {

StructuralModel worked_model() {
  return StructuralModel({CellSpec{{0.5, 0.5}, {0.9, 0.5}, {0.5, 0.3}, {0.9, 0.7}, {0.3, 0.5}, 0.5}}, {1.0});
}

StructuralModel wide_model(std::size_t k) {
  std::vector<CellSpec> cells;
  std::vector<double> probs(k, 1.0 / static_cast<double>(k));
  for (std::size_t l = 0; l < k; ++l) {
    const double s = 0.1 * static_cast<double>(l % 5);
    cells.push_back(CellSpec{{0.5, 0.5}, {0.9 - s, 0.5}, {0.5, 0.3 + s}, {0.9, 0.7}, {0.3, 0.5}, 0.5});
  }
  return StructuralModel(std::move(cells), std::move(probs));
}

void BM_Sample(benchmark::State& state) {
  const auto model = worked_model();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample(model, n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sample)->Arg(10000)->Arg(100000);

void BM_FitAndArgmax(benchmark::State& state) {
  const auto data = sample(wide_model(static_cast<std::size_t>(state.range(0))), 100000, 2);
  for (auto _ : state) {
    const auto est = fit_nuisances(data);
    benchmark::DoNotOptimize(argmax_regime(data, est, Objective::Id2));
  }
}
BENCHMARK(BM_FitAndArgmax)->Arg(1)->Arg(16);

void BM_CellBounds(benchmark::State& state) {
  const auto cells = cell_observables_from(worked_model());
  for (auto _ : state) benchmark::DoNotOptimize(counterfactual_bounds(cells[0]));
}
BENCHMARK(BM_CellBounds);

void BM_PopulationArgmax(benchmark::State& state) {
  const auto model = wide_model(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(population_argmax(model, Objective::Id1));
}
BENCHMARK(BM_PopulationArgmax)->Arg(4)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
