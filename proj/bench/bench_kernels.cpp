// Copyright 2026 The vidlabel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "vidlabel/core.hpp"
#include "vidlabel/kernels.hpp"

namespace {

using vidlabel::Embedding;
namespace k = vidlabel::kernels;

std::vector<Embedding> random_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Embedding> out;
  out.reserve(n);
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : v) x = normal(rng);
    out.push_back(vidlabel::l2_normalize(v));
  }
  return out;
}

template <auto Fn>
void bm_similarity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const k::EmbeddingMatrix a(random_rows(n, 128, 1));
  const k::EmbeddingMatrix b(random_rows(64, 128, 2));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 64));
}

template <auto Fn>
void bm_pairwise(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const k::EmbeddingMatrix p(random_rows(n, 128, 3));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Fn>
void bm_pool(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<Embedding>> groups;
  for (std::size_t g = 0; g < n; ++g) groups.push_back(random_rows(8, 128, 10 + g));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(groups));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(bm_similarity<k::similarity_matrix_serial>)->Arg(256)->Arg(2048);
BENCHMARK(bm_similarity<k::similarity_matrix_omp>)->Arg(256)->Arg(2048);
BENCHMARK(bm_pairwise<k::pairwise_cosine_distance_serial>)->Arg(100)->Arg(800);
BENCHMARK(bm_pairwise<k::pairwise_cosine_distance_omp>)->Arg(100)->Arg(800);
BENCHMARK(bm_pool<k::pool_groups_serial>)->Arg(200)->Arg(2000);
BENCHMARK(bm_pool<k::pool_groups_omp>)->Arg(200)->Arg(2000);

BENCHMARK_MAIN();
