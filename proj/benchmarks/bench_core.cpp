// Copyright 2026 The OrthoFlux Authors
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

#include <benchmark/benchmark.h>

#include "orthoflux/fpe.hpp"
#include "orthoflux/models.hpp"
#include "orthoflux/rng.hpp"
#include "orthoflux/sde.hpp"
#include "orthoflux/thermo.hpp"

using namespace orthoflux;

namespace {

void BM_PhiloxBlock(benchmark::State& state) {
  Philox4x32::Counter c{0, 0, 0, 0};
  const Philox4x32::Key k{0x12345678u, 0x9abcdef0u};
  for (auto _ : state) {
    c = Philox4x32::block(c, k);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_PhiloxBlock);

void BM_NormalDraw(benchmark::State& state) {
  CounterStream s(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(s.normal());
}
BENCHMARK(BM_NormalDraw);

void BM_BuildOperator(benchmark::State& state) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_operator(grid, m));
}
BENCHMARK(BM_BuildOperator)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_OperatorApply(benchmark::State& state) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, static_cast<int>(state.range(0)));
  const FpeOperator op = build_operator(grid, m);
  const Vector u = equilibrium_density(grid, m.phi).values;
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(u));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_OperatorApply)->Arg(64)->Arg(128)->Arg(256);

void BM_HeunStep(benchmark::State& state) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, static_cast<int>(state.range(0)));
  const FpeOperator op = build_operator(grid, m);
  DensityField u = equilibrium_density(grid, m.phi);
  const double dt = op.stability_bound();
  for (auto _ : state) benchmark::DoNotOptimize(step_forward(op, u, dt));
}
BENCHMARK(BM_HeunStep)->Arg(64)->Arg(128);

void BM_ThermoSnapshot(benchmark::State& state) {
  const FieldModel m = rotational_ou(1.0, 1.0, 1.0);
  const Grid grid = Grid::uniform(m.box, 128);
  const FpeOperator op = build_operator(grid, m);
  const DensityField u = equilibrium_density(grid, m.phi);
  for (auto _ : state) benchmark::DoNotOptimize(thermo_snapshot(op, u));
}
BENCHMARK(BM_ThermoSnapshot);

// Path-steps per second of Euler-Maruyama on a constant and a singular D.
void BM_SdeSteps(benchmark::State& state) {
  const FieldModel m = state.range(0) == 0 ? rotational_ou(1.0, 1.0, 1.0)
                                           : make_model("klein_kramers", {});
  SimConfig c;
  c.dt = 1e-3;
  c.T = 0.1;
  c.n_paths = 1000;
  c.threads = 1;
  c.initial = InitialCondition::at(Vector::Zero(2));
  c.record_every = c.n_steps();
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, c));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.n_paths * c.n_steps()));
}
BENCHMARK(BM_SdeSteps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
