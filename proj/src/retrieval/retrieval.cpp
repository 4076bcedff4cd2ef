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

#include "tagrec/retrieval/retrieval.hpp"

#include <cmath>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"

namespace tagrec::retrieval {

namespace {

void normalize_rows(std::vector<double>& v, std::size_t dim) {
  if (dim == 0) return;
  for (std::size_t i = 0; i < v.size(); i += dim) {
    const double n = std::sqrt(dot(v.data() + i, v.data() + i, dim));
    if (n > 0.0) {
      for (std::size_t k = 0; k < dim; ++k) v[i + k] /= n;
    }
  }
}

Vec prepare(const CatalogIndex& index, const Vec& query) {
  if (query.size() != index.dim) {
    throw ConfigError(fmt::format("query dimension {} vs index {}", query.size(), index.dim));
  }
  Vec q = query;
  if (index.normalized) normalize_rows(q, q.size());
  return q;
}

}  // namespace

CatalogIndex make_index(std::vector<std::string> ids, std::vector<double> vectors,
                        std::size_t dim, bool normalize) {
  if (vectors.size() != ids.size() * dim) {
    throw ConfigError(fmt::format("index: {} values for {} ids of dim {}", vectors.size(),
                                  ids.size(), dim));
  }
  CatalogIndex idx;
  idx.ids = std::move(ids);
  idx.vectors = std::move(vectors);
  idx.dim = dim;
  idx.normalized = normalize;
  if (normalize) normalize_rows(idx.vectors, dim);
  return idx;
}

CatalogIndex index_catalog(const TriTowerModel& model, const Catalog& catalog, Kernel kernel,
                           bool normalize) {
  std::vector<ItemRows> rows;
  std::vector<std::string> ids;
  rows.reserve(catalog.size());
  for (const auto& it : catalog.items()) {
    rows.push_back(model.encode_item(features_of(it)));
    ids.push_back(it.item_id);
  }
  std::vector<double> v = kernel == Kernel::kOmp ? kernels::omp::embed_catalog(model, rows)
                                                 : kernels::serial::embed_catalog(model, rows);
  return make_index(std::move(ids), std::move(v), model.cfg.out_dim, normalize);
}

std::vector<Hit> retrieve_topk(const CatalogIndex& index, const Vec& query, std::size_t k,
                               Kernel kernel) {
  const Vec q = prepare(index, query);
  if (k == 0 || index.size() == 0) return {};
  const bool omp = kernel == Kernel::kOmp;
  const std::vector<double> scores =
      omp ? kernels::omp::score_catalog(q, index.vectors, index.dim)
          : kernels::serial::score_catalog(q, index.vectors, index.dim);
  const std::vector<Scored> top = omp ? kernels::omp::topk(scores, index.ids, k)
                                      : kernels::serial::topk(scores, index.ids, k);
  std::vector<Hit> out;
  out.reserve(top.size());
  for (const auto& s : top) out.push_back({index.ids[s.index], s.score});
  return out;
}

bool validity_probe(const TriTowerModel& model, std::string_view tag,
                    const CatalogIndex& index, double threshold, Kernel kernel) {
  if (index.size() == 0) return false;
  const Vec q = prepare(index, model.embed_tag(tag));
  const double best = kernel == Kernel::kOmp
                          ? kernels::omp::max_score(q, index.vectors, index.dim)
                          : kernels::serial::max_score(q, index.vectors, index.dim);
  return best >= threshold;
}

Vec user_vector(const TriTowerModel& model, const Dataset& ds, std::string_view user_id,
                Timestamp before, std::size_t max_history) {
  std::vector<std::vector<ItemFeatures>> seqs;
  for (const auto& slot : ds.history(user_id, before, model.cfg.behaviors, max_history)) {
    auto& out = seqs.emplace_back();
    for (std::size_t i : slot) out.push_back(features_of(ds.catalog.at(i)));
  }
  return model.embed_user(user_id, seqs);
}

Vec tags_vector(const TriTowerModel& model, const std::vector<std::string>& tags) {
  if (tags.empty()) throw ValidationError("no tags to embed");
  Vec out(model.cfg.out_dim, 0.0);
  for (const auto& t : tags) {
    const Vec h = model.embed_tag(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h[i];
  }
  for (double& v : out) v /= static_cast<double>(tags.size());
  return out;
}

}  // namespace tagrec::retrieval
