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

// Exact top-k retrieval over a materialized catalog.

#ifndef TAGREC_RETRIEVAL_RETRIEVAL_HPP_
#define TAGREC_RETRIEVAL_RETRIEVAL_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tagrec/common/time.hpp"
#include "tagrec/retrieval/dataset.hpp"
#include "tagrec/retrieval/kernels.hpp"
#include "tagrec/retrieval/model.hpp"

namespace tagrec::retrieval {

enum class Kernel { kSerial, kOmp };

// Immutable snapshot of item vectors; safe for concurrent queries.
struct CatalogIndex {
  std::vector<std::string> ids;
  std::vector<double> vectors;  // ids.size() x dim
  std::size_t dim = 0;
  bool normalized = false;  // rows and queries scaled to unit length

  std::size_t size() const { return ids.size(); }
  const double* row(std::size_t i) const { return vectors.data() + i * dim; }
};

CatalogIndex index_catalog(const TriTowerModel& model, const Catalog& catalog,
                           Kernel kernel = Kernel::kOmp, bool normalize = false);
// From precomputed vectors. Throws ConfigError on a size mismatch.
CatalogIndex make_index(std::vector<std::string> ids, std::vector<double> vectors,
                        std::size_t dim, bool normalize = false);

struct Hit {
  std::string item_id;
  double score = 0.0;
  bool operator==(const Hit&) const = default;
};

// Exact top-k by descending dot product, ties by ascending item_id. k
// beyond the catalog size returns the full ranking.
std::vector<Hit> retrieve_topk(const CatalogIndex& index, const Vec& query, std::size_t k,
                               Kernel kernel = Kernel::kOmp);

// True iff some item scores h_t . h_v >= threshold. False on an empty
// catalog.
bool validity_probe(const TriTowerModel& model, std::string_view tag,
                    const CatalogIndex& index, double threshold,
                    Kernel kernel = Kernel::kOmp);

// h_u from the user's interactions strictly before `before`.
Vec user_vector(const TriTowerModel& model, const Dataset& ds, std::string_view user_id,
                Timestamp before, std::size_t max_history = 50);

// Mean of h_t over the tags; throws ValidationError when empty.
Vec tags_vector(const TriTowerModel& model, const std::vector<std::string>& tags);

}  // namespace tagrec::retrieval

#endif  // TAGREC_RETRIEVAL_RETRIEVAL_HPP_
