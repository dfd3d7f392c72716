// Copyright 2026 The cbf-laplace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "cbf/control.hpp"
#include "cbf/laplace.hpp"
#include "cbf/transform.hpp"

using namespace cbf;

namespace {

const Shape kShape{2, 8};

struct Problem {
  SpectralField y0 = random_divergence_free(1, 2.0, 0.3, kShape);
  Observable g = Observable::bounded_tanh(random_divergence_free(7, 2.0, 0.1, kShape), 0.5);
  PhysicalParams params;
  NoiseSpec noise{1.0, std::numeric_limits<double>::quiet_NaN(), 16.0};
  TimeGrid grid{0.0, 0.25, 25};
};

const Problem& problem() {
  static const Problem p;
  return p;
}

void BM_EstimatorSerialReference(benchmark::State& state) {
  const Problem& p = problem();
  const int samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto est = reference::estimate_laplace_serial(p.y0, p.g, p.grid.T, samples, p.params,
                                                  ForcingSpec::zero(), p.noise, p.grid, 3);
    benchmark::DoNotOptimize(est.value);
  }
  state.SetItemsProcessed(state.iterations() * samples);
}

void BM_EstimatorOpenMP(benchmark::State& state) {
  const Problem& p = problem();
  const int samples = static_cast<int>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  omp_set_num_threads(threads);
  for (auto _ : state) {
    auto est = estimate_laplace(p.y0, p.g, p.grid.T, samples, p.params, ForcingSpec::zero(),
                                p.noise, p.grid, 3);
    benchmark::DoNotOptimize(est.value);
  }
  state.SetItemsProcessed(state.iterations() * samples);
  state.counters["threads"] = threads;
}

void BM_MinimizeValue(benchmark::State& state) {
  const Problem& p = problem();
  OptimizerOptions opt;
  opt.parallel = state.range(0) != 0;
  NoiseSpec unit = p.noise;
  unit.n = 1.0;
  for (auto _ : state) {
    auto v = minimize_value(p.y0, p.g, p.params, ForcingSpec::zero(), unit, p.grid, opt);
    benchmark::DoNotOptimize(v.V);
  }
}

void BM_SynthesisFFT(benchmark::State& state) {
  const Shape shape{2, static_cast<int>(state.range(0))};
  const auto u = random_divergence_free(2, 2.0, 1.0, shape);
  const int points = dealiased_points(shape.n, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(to_physical(u, points).values.data());
}

void BM_SynthesisDirect(benchmark::State& state) {
  const Shape shape{2, static_cast<int>(state.range(0))};
  const auto u = random_divergence_free(2, 2.0, 1.0, shape);
  const int points = dealiased_points(shape.n, 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(reference::to_physical_direct(u, points).values.data());
}

}  // namespace

BENCHMARK(BM_EstimatorSerialReference)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimatorOpenMP)
    ->ArgsProduct({{256, 1024}, {1, 2, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_MinimizeValue)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SynthesisFFT)->Arg(8)->Arg(16);
BENCHMARK(BM_SynthesisDirect)->Arg(8)->Arg(16);

BENCHMARK_MAIN();
