// Copyright 2026 The ohmpipe Authors
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


// Serial vs OpenMP kernels, plus the end-to-end hot paths.
//
//   ./ohmpipe_bench --benchmark_filter=NearestCenter

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "ohmpipe/contrastive.hpp"
#include "ohmpipe/ingest.hpp"
#include "ohmpipe/kernels.hpp"
#include "ohmpipe/metrics.hpp"
#include "ohmpipe/pipeline.hpp"

namespace {

using namespace ohmpipe;

Matrix random_rows(std::size_t rows, std::size_t cols, std::uint64_t seed, bool unit) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m;
  Vec v(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& x : v) x = g(rng);
    if (unit) l2_normalize_inplace(v);
    m.append_row(v);
  }
  return m;
}

kernels::Exec mode(const benchmark::State& state) {
  return state.range(0) == 0 ? kernels::Exec::serial : kernels::Exec::parallel;
}

void NearestCenter(benchmark::State& state) {
  const Matrix pts = random_rows(4096, 64, 1, true);
  const Matrix ctr = random_rows(32, 64, 2, true);
  std::vector<std::size_t> labels(pts.rows());
  std::vector<double> dist(pts.rows());
  for (auto _ : state) {
    kernels::nearest_center(pts, ctr, labels, dist, mode(state));
    benchmark::DoNotOptimize(labels.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.rows()));
}
BENCHMARK(NearestCenter)->Arg(0)->Arg(1)->ArgName("parallel");

void BatchCrossCosine(benchmark::State& state) {
  const std::size_t batches = 4000, size = 16;
  const Matrix rows = random_rows(batches * size, 64, 3, true);
  std::vector<std::uint32_t> groups(rows.rows());
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i] = static_cast<std::uint32_t>(i);
  std::vector<kernels::BatchSpan> spans;
  for (std::size_t b = 0; b < batches; ++b) spans.push_back({b * size, size});
  std::vector<kernels::CrossCosine> out(batches);
  for (auto _ : state) {
    kernels::batch_cross_cosine(rows, groups, spans, out, mode(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batches));
}
BENCHMARK(BatchCrossCosine)->Arg(0)->Arg(1)->ArgName("parallel");

void BatchHardness(benchmark::State& state) {
  SyntheticSpec spec;
  spec.samples_per_cluster = 200;
  const auto batches = uniform_batches(generate_synthetic(spec), 16, 0);
  for (auto _ : state) {
    auto rows = batch_hardness(batches, ContrastiveConfig{}, mode(state));
    benchmark::DoNotOptimize(rows.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batches.size()));
}
BENCHMARK(BatchHardness)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void ScoreUtterances(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> word(0, 50), len(3, 25);
  auto sentence = [&] {
    std::string s;
    for (int k = len(rng); k > 0; --k) s += "w" + std::to_string(word(rng)) + " ";
    return s;
  };
  std::vector<ScoredUtterance> utts;
  for (int i = 0; i < 5000; ++i) utts.push_back({std::to_string(i), i % 2 ? "a" : "b", sentence(), sentence()});
  for (auto _ : state) {
    auto rep = score(utts, mode(state));
    benchmark::DoNotOptimize(rep.counts);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(utts.size()));
}
BENCHMARK(ScoreUtterances)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void ParseRecord(benchmark::State& state) {
  SyntheticSpec spec;
  spec.n_clusters = 4;
  spec.samples_per_cluster = 256;
  spec.with_context = state.range(0) != 0;
  std::vector<std::string> lines;
  for (const auto& s : generate_synthetic(spec)) lines.push_back(sample_to_record(s));
  std::size_t i = 0;
  for (auto _ : state) {
    auto s = sample_from_line(lines[i++ % lines.size()], 64);
    benchmark::DoNotOptimize(s.embedding.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(ParseRecord)->Arg(0)->Arg(1)->ArgName("context");

// Pipeline alone on pre-parsed samples, default config at dim 64.
void PipelinePush(benchmark::State& state) {
  SyntheticSpec spec;
  spec.samples_per_cluster = 1250;
  const auto samples = generate_synthetic(spec);
  OhmConfig cfg;
  cfg.dim = 64;
  cfg.exec = mode(state);
  for (auto _ : state) {
    std::size_t n = 0;
    run_pipeline(vector_source(samples), cfg, [&](Batch&& b) { n += b.samples.size(); });
    benchmark::DoNotOptimize(n);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}
BENCHMARK(PipelinePush)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
