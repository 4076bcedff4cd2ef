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

// Tag -> category mapping: an exact keyword lookup on the tag's core words,
// then the nearest category centroid in item space.

#ifndef TAGREC_TAXONOMY_TAG_TO_CATE_HPP_
#define TAGREC_TAXONOMY_TAG_TO_CATE_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tagrec/retrieval/dataset.hpp"
#include "tagrec/retrieval/model.hpp"

namespace tagrec::taxonomy {

struct CategoryInfo {
  std::string id;
  std::string name;
  bool operator==(const CategoryInfo&) const = default;
};

// Immutable once built; concurrent lookups are safe.
struct CategoryTaxonomy {
  std::vector<CategoryInfo> categories;  // sorted by id
  std::map<std::string, std::set<std::string>, std::less<>> keywords;  // token -> ids
  std::map<std::string, retrieval::Vec> centroids;
  std::vector<std::string> excluded;  // named categories without items
  std::size_t dim = 0;

  const CategoryInfo* find(std::string_view id) const;
};

// Centroid = mean h_v of the category's items. Keywords are the tokens of
// category names and item titles. Throws ValidationError on an empty
// catalog.
CategoryTaxonomy build_taxonomy(const retrieval::Catalog& catalog,
                                const retrieval::TriTowerModel& model,
                                const std::map<std::string, std::string>& names = {});

// The last two word tokens of the tag.
std::vector<std::string> core_tokens(std::string_view tag);

enum class MapRoute { kKeyword, kCentroid };

struct Mapping {
  std::string category;
  MapRoute route = MapRoute::kKeyword;
  double score = 0.0;  // centroid route only
};

// Total and deterministic. Core tokens hitting exactly one category pick
// it; otherwise the centroid maximizing h_t . c wins, ties to the lower id.
Mapping map_tag_detail(const CategoryTaxonomy& tax, const retrieval::TriTowerModel& model,
                       std::string_view tag);
std::string map_tag(const CategoryTaxonomy& tax, const retrieval::TriTowerModel& model,
                    std::string_view tag);

// Writes `path` (JSON: categories, keywords, excluded, dim, centroid file
// name) and a float64 little-endian centroid sidecar next to it.
void save_taxonomy(const CategoryTaxonomy& tax, const std::filesystem::path& path);
CategoryTaxonomy load_taxonomy(const std::filesystem::path& path);

}  // namespace tagrec::taxonomy

#endif  // TAGREC_TAXONOMY_TAG_TO_CATE_HPP_
