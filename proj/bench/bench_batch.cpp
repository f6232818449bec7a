// Copyright 2026 The lagsim Authors
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

#include "lagsim/harness.hpp"

namespace {

lagsim::Scenario grid() {
  lagsim::Scenario s = lagsim::parse_scenario(R"(
name: bench
duration_s: 6
drain_s: 1
services:
  - {type: video, src: server, dst: client1}
  - {type: voice, src: server, dst: client2}
  - {type: data, src: server, dst: client1, total_bytes: 10000000}
batch: {cut_at_s: 3, trials_per_cell: 1}
)");
  return s;
}

void BM_BatchSerial(benchmark::State& state) {
  const lagsim::Scenario s = grid();
  for (auto _ : state) benchmark::DoNotOptimize(lagsim::run_batch_serial(s).mean_ms);
  state.SetItemsProcessed(state.iterations() * 16);
}

void BM_BatchParallel(benchmark::State& state) {
  const lagsim::Scenario s = grid();
  for (auto _ : state) benchmark::DoNotOptimize(lagsim::run_batch(s).mean_ms);
  state.SetItemsProcessed(state.iterations() * 16);
}

BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
