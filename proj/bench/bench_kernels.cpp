// Copyright 2026 The tagrec Authors.
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


// Serial against OpenMP catalog kernels.

#include <map>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "tagrec/common/random.hpp"
#include "tagrec/retrieval/kernels.hpp"
#include "tagrec/retrieval/model.hpp"

namespace {

using namespace tagrec;
using namespace tagrec::retrieval;

constexpr std::size_t kDim = 32;

struct Catalog {
  std::vector<std::string> ids;
  std::vector<double> matrix;
  Vec query;
};

const Catalog& catalog(std::size_t n) {
  static std::map<std::size_t, Catalog> cache;
  auto [it, fresh] = cache.try_emplace(n);
  if (fresh) {
    Rng rng(n);
    it->second.matrix.resize(n * kDim);
    for (auto& x : it->second.matrix) x = rng.normal();
    for (std::size_t i = 0; i < n; ++i) it->second.ids.push_back("i" + std::to_string(i));
    it->second.query.resize(kDim);
    for (auto& x : it->second.query) x = rng.normal();
  }
  return it->second;
}

struct Model {
  TriTowerModel model;
  std::vector<ItemRows> rows;
};

const Model& model(std::size_t n) {
  static std::map<std::size_t, Model> cache;
  auto [it, fresh] = cache.try_emplace(n);
  if (fresh) {
    Rng rng(n);
    ModelConfig cfg;
    cfg.emb_dim = 16;
    cfg.out_dim = kDim;
    std::vector<ItemFeatures> items;
    for (std::size_t i = 0; i < n; ++i) {
      ItemFeatures f;
      f.sparse["item_id"] = "i" + std::to_string(i);
      f.sparse["category"] = "c" + std::to_string(i % 40);
      f.sparse["brand"] = "b" + std::to_string(rng.uniform_index(200));
      f.dense["price"] = rng.uniform(1.0, 500.0);
      f.dense["sales"] = rng.uniform(0.0, 1e4);
      items.push_back(std::move(f));
    }
    it->second.model = build_model(cfg, items, {"u"}, {"wool scarf"});
    for (const auto& f : items) it->second.rows.push_back(it->second.model.encode_item(f));
  }
  return it->second;
}

template <bool Omp>
void BM_ScoreCatalog(benchmark::State& state) {
  const auto& c = catalog(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto s = Omp ? kernels::omp::score_catalog(c.query, c.matrix, kDim)
                 : kernels::serial::score_catalog(c.query, c.matrix, kDim);
    benchmark::DoNotOptimize(s.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Omp>
void BM_TopK(benchmark::State& state) {
  const auto& c = catalog(static_cast<std::size_t>(state.range(0)));
  const auto scores = kernels::serial::score_catalog(c.query, c.matrix, kDim);
  for (auto _ : state) {
    auto top = Omp ? kernels::omp::topk(scores, c.ids, 100)
                   : kernels::serial::topk(scores, c.ids, 100);
    benchmark::DoNotOptimize(top.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Omp>
void BM_EmbedCatalog(benchmark::State& state) {
  const auto& m = model(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto e = Omp ? kernels::omp::embed_catalog(m.model, m.rows)
                 : kernels::serial::embed_catalog(m.model, m.rows);
    benchmark::DoNotOptimize(e.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK_TEMPLATE(BM_ScoreCatalog, false)->Arg(10000)->Arg(100000);
BENCHMARK_TEMPLATE(BM_ScoreCatalog, true)->Arg(10000)->Arg(100000);
BENCHMARK_TEMPLATE(BM_TopK, false)->Arg(10000)->Arg(100000);
BENCHMARK_TEMPLATE(BM_TopK, true)->Arg(10000)->Arg(100000);
BENCHMARK_TEMPLATE(BM_EmbedCatalog, false)->Arg(5000);
BENCHMARK_TEMPLATE(BM_EmbedCatalog, true)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
