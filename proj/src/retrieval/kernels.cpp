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

#include "tagrec/retrieval/kernels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <omp.h>

#include "tagrec/common/error.hpp"

namespace tagrec::retrieval {

bool ranks_before(const Scored& a, const Scored& b, const std::vector<std::string>& ids) {
  if (a.score != b.score) return a.score > b.score;
  const int c = ids[a.index].compare(ids[b.index]);
  if (c != 0) return c < 0;
  return a.index < b.index;
}

namespace {

void check_matrix(const Vec& query, const std::vector<double>& matrix, std::size_t dim) {
  if (query.size() != dim) throw ConfigError("query dimension mismatch");
  if (dim == 0 ? !matrix.empty() : matrix.size() % dim != 0) {
    throw ConfigError("matrix size is not a multiple of the dimension");
  }
}

std::vector<Scored> topk_range(const std::vector<double>& scores,
                               const std::vector<std::string>& ids, std::size_t lo,
                               std::size_t hi, std::size_t k) {
  std::vector<Scored> all;
  all.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) all.push_back({i, scores[i]});
  auto cmp = [&](const Scored& a, const Scored& b) { return ranks_before(a, b, ids); };
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), cmp);
  all.resize(k);
  return all;
}

void check_ids(const std::vector<double>& scores, const std::vector<std::string>& ids) {
  if (scores.size() != ids.size()) throw ConfigError("scores and ids differ in length");
}

}  // namespace

namespace kernels::serial {

std::vector<double> embed_catalog(const TriTowerModel& model,
                                  const std::vector<ItemRows>& items) {
  const std::size_t d = model.cfg.out_dim;
  std::vector<double> out(items.size() * d);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Vec h = model.item_tower.forward(model.item_input(items[i]));
    std::copy(h.begin(), h.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return out;
}

std::vector<double> score_catalog(const Vec& query, const std::vector<double>& matrix,
                                  std::size_t dim) {
  check_matrix(query, matrix, dim);
  const std::size_t n = dim ? matrix.size() / dim : 0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = dot(query.data(), matrix.data() + i * dim, dim);
  return out;
}

std::vector<Scored> topk(const std::vector<double>& scores,
                         const std::vector<std::string>& ids, std::size_t k) {
  check_ids(scores, ids);
  return topk_range(scores, ids, 0, scores.size(), k);
}

double max_score(const Vec& query, const std::vector<double>& matrix, std::size_t dim) {
  double best = -std::numeric_limits<double>::infinity();
  for (double s : score_catalog(query, matrix, dim)) best = std::max(best, s);
  return best;
}

}  // namespace kernels::serial

namespace kernels::omp {

std::vector<double> embed_catalog(const TriTowerModel& model,
                                  const std::vector<ItemRows>& items) {
  const std::size_t d = model.cfg.out_dim;
  std::vector<double> out(items.size() * d);
  const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Vec h = model.item_tower.forward(model.item_input(items[static_cast<std::size_t>(i)]));
    std::copy(h.begin(), h.end(), out.begin() + i * static_cast<std::ptrdiff_t>(d));
  }
  return out;
}

std::vector<double> score_catalog(const Vec& query, const std::vector<double>& matrix,
                                  std::size_t dim) {
  check_matrix(query, matrix, dim);
  const auto n = static_cast<std::ptrdiff_t>(dim ? matrix.size() / dim : 0);
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        dot(query.data(), matrix.data() + static_cast<std::size_t>(i) * dim, dim);
  }
  return out;
}

// Per-thread top-k over contiguous chunks, then a merge under the same
// total order.
std::vector<Scored> topk(const std::vector<double>& scores,
                         const std::vector<std::string>& ids, std::size_t k) {
  check_ids(scores, ids);
  const std::size_t n = scores.size();
  const int threads = std::max(1, omp_get_max_threads());
  std::vector<std::vector<Scored>> parts(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
  {
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t lo = n * t / nt;
    const std::size_t hi = n * (t + 1) / nt;
    parts[t] = topk_range(scores, ids, lo, hi, k);
  }
  std::vector<Scored> merged;
  for (auto& p : parts) merged.insert(merged.end(), p.begin(), p.end());
  auto cmp = [&](const Scored& a, const Scored& b) { return ranks_before(a, b, ids); };
  k = std::min(k, merged.size());
  std::partial_sort(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(k),
                    merged.end(), cmp);
  merged.resize(k);
  return merged;
}

double max_score(const Vec& query, const std::vector<double>& matrix, std::size_t dim) {
  const std::vector<double> s = score_catalog(query, matrix, dim);
  double best = -std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::ptrdiff_t>(s.size());
#pragma omp parallel for reduction(max : best)
  for (std::ptrdiff_t i = 0; i < n; ++i) best = std::max(best, s[static_cast<std::size_t>(i)]);
  return best;
}

}  // namespace kernels::omp

}  // namespace tagrec::retrieval
