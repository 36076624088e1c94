// Copyright 2026 The rbridge Authors.
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

// Serial vs OpenMP kernels: batch trace scoring and Kendall pair counts.

#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "rbridge/kernels.hpp"

namespace {

using namespace rbridge;

struct TraceBatch {
  std::vector<TracedExample> traces;
  std::vector<std::vector<ProxyTokenNLL>> nlls;
  std::vector<kernels::ScoreJob> jobs;
};

std::vector<std::string> split(const std::string& text, std::mt19937_64& rng, int max_piece) {
  std::uniform_int_distribution<int> len(1, max_piece);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t n = std::min<std::size_t>(len(rng), text.size() - i);
    out.push_back(text.substr(i, n));
    i += n;
  }
  return out;
}

const TraceBatch& batch(int n) {
  static std::map<int, TraceBatch> cache;
  auto [it, fresh] = cache.try_emplace(n);
  if (!fresh) return it->second;
  auto& b = it->second;
  std::mt19937_64 rng(n);
  std::uniform_int_distribution<int> ch('a', 'z');
  std::uniform_real_distribution<double> p(1e-4, 1.0);
  std::uniform_real_distribution<double> v(0.0, 8.0);
  b.traces.resize(n);
  b.nlls.resize(n);
  for (int i = 0; i < n; ++i) {
    std::string text(2000, ' ');
    for (std::size_t k = 0; k < text.size(); ++k) text[k] = k % 6 == 5 ? ' ' : static_cast<char>(ch(rng));
    auto& t = b.traces[i];
    t.item_id = std::to_string(i);
    t.reasoning = text;
    for (auto& s : split(text, rng, 5)) t.frontier_tokens.push_back({s, p(rng)});
    for (auto& s : split(text, rng, 6)) b.nlls[i].push_back({s, v(rng)});
  }
  for (int i = 0; i < n; ++i) b.jobs.push_back({&b.traces[i], b.nlls[i]});
  return b;
}

void BM_ScoreTracesSerial(benchmark::State& state) {
  const auto& b = batch(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::score_traces_serial(b.jobs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreTracesParallel(benchmark::State& state) {
  const auto& b = batch(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::score_traces_parallel(b.jobs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = kernels::max_threads();
}

std::pair<std::vector<double>, std::vector<double>> pairs_input(std::size_t n) {
  std::mt19937_64 rng(n);
  std::normal_distribution<double> g;
  std::vector<double> x(n), y(n);
  for (auto& a : x) a = g(rng);
  for (auto& c : y) c = g(rng);
  return {x, y};
}

void BM_PairCountsSerial(benchmark::State& state) {
  const auto [x, y] = pairs_input(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::pair_counts_serial(x, y));
}

void BM_PairCountsParallel(benchmark::State& state) {
  const auto [x, y] = pairs_input(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::pair_counts_parallel(x, y));
  state.counters["threads"] = kernels::max_threads();
}

}  // namespace

BENCHMARK(BM_ScoreTracesSerial)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreTracesParallel)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairCountsSerial)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PairCountsParallel)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
