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

// Catalog scoring kernels. The serial and OpenMP variants return identical
// results: every score is the same sequential dot product and top-k uses a
// total order.

#ifndef TAGREC_RETRIEVAL_KERNELS_HPP_
#define TAGREC_RETRIEVAL_KERNELS_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "tagrec/retrieval/model.hpp"

namespace tagrec::retrieval {

struct Scored {
  std::size_t index = 0;  // row in the scored matrix
  double score = 0.0;
  bool operator==(const Scored&) const = default;
};

// Score descending, then id ascending, then row ascending.
bool ranks_before(const Scored& a, const Scored& b, const std::vector<std::string>& ids);

namespace kernels::serial {

// h_v of every item, row-major n x d.
std::vector<double> embed_catalog(const TriTowerModel& model,
                                  const std::vector<ItemRows>& items);
std::vector<double> score_catalog(const Vec& query, const std::vector<double>& matrix,
                                  std::size_t dim);
std::vector<Scored> topk(const std::vector<double>& scores,
                         const std::vector<std::string>& ids, std::size_t k);
// -inf for an empty matrix.
double max_score(const Vec& query, const std::vector<double>& matrix, std::size_t dim);

}  // namespace kernels::serial

namespace kernels::omp {

std::vector<double> embed_catalog(const TriTowerModel& model,
                                  const std::vector<ItemRows>& items);
std::vector<double> score_catalog(const Vec& query, const std::vector<double>& matrix,
                                  std::size_t dim);
std::vector<Scored> topk(const std::vector<double>& scores,
                         const std::vector<std::string>& ids, std::size_t k);
double max_score(const Vec& query, const std::vector<double>& matrix, std::size_t dim);

}  // namespace kernels::omp

}  // namespace tagrec::retrieval

#endif  // TAGREC_RETRIEVAL_KERNELS_HPP_
