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

#include "tagrec/taxonomy/tag_to_cate.hpp"

#include <bit>

#include <fmt/format.h>
#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/text.hpp"

namespace tagrec::taxonomy {

using nlohmann::json;

namespace {

constexpr char kCentroidMagic[8] = {'T', 'A', 'G', 'C', 'E', 'N', 'T', '1'};

void put(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get(const std::string& s, std::size_t& pos) {
  if (s.size() - pos < 8) throw ValidationError("centroid file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
  }
  return v;
}

}  // namespace

const CategoryInfo* CategoryTaxonomy::find(std::string_view id) const {
  for (const auto& c : categories) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

CategoryTaxonomy build_taxonomy(const retrieval::Catalog& catalog,
                                const retrieval::TriTowerModel& model,
                                const std::map<std::string, std::string>& names) {
  if (catalog.size() == 0) throw ValidationError("cannot build a taxonomy from an empty catalog");
  CategoryTaxonomy tax;
  tax.dim = model.cfg.out_dim;
  for (const auto& [id, members] : catalog.by_category()) {
    auto nit = names.find(id);
    tax.categories.push_back({id, nit == names.end() ? id : nit->second});
    retrieval::Vec c(tax.dim, 0.0);
    for (std::size_t i : members) {
      const retrieval::Vec h = model.embed_item(retrieval::features_of(catalog.at(i)));
      for (std::size_t k = 0; k < tax.dim; ++k) c[k] += h[k];
      for (const auto& w : text::tokenize_words(catalog.at(i).title)) tax.keywords[w].insert(id);
    }
    for (double& v : c) v /= static_cast<double>(members.size());
    tax.centroids[id] = std::move(c);
    if (nit != names.end()) {
      for (const auto& w : text::tokenize_words(nit->second)) tax.keywords[w].insert(id);
    }
  }
  for (const auto& [id, name] : names) {
    if (!catalog.by_category().count(id)) tax.excluded.push_back(id);
  }
  return tax;
}

std::vector<std::string> core_tokens(std::string_view tag) {
  std::vector<std::string> words = text::tokenize_words(tag);
  if (words.size() > 2) words.erase(words.begin(), words.end() - 2);
  return words;
}

Mapping map_tag_detail(const CategoryTaxonomy& tax, const retrieval::TriTowerModel& model,
                       std::string_view tag) {
  if (tax.centroids.empty()) throw ValidationError("taxonomy has no categories");
  std::set<std::string> hits;
  for (const auto& w : core_tokens(tag)) {
    auto it = tax.keywords.find(w);
    if (it != tax.keywords.end()) hits.insert(it->second.begin(), it->second.end());
  }
  if (hits.size() == 1) return {*hits.begin(), MapRoute::kKeyword, 0.0};

  const retrieval::Vec ht = model.embed_tag(tag);
  Mapping best{std::string(), MapRoute::kCentroid, 0.0};
  // Centroids iterate in ascending id, so strict > keeps the lower id on ties.
  for (const auto& [id, c] : tax.centroids) {
    const double s = retrieval::score(ht, c);
    if (best.category.empty() || s > best.score) {
      best.category = id;
      best.score = s;
    }
  }
  return best;
}

std::string map_tag(const CategoryTaxonomy& tax, const retrieval::TriTowerModel& model,
                    std::string_view tag) {
  return map_tag_detail(tax, model, tag).category;
}

void save_taxonomy(const CategoryTaxonomy& tax, const std::filesystem::path& path) {
  const std::string sidecar = path.filename().string() + ".centroids";
  json j;
  j["categories"] = json::array();
  for (const auto& c : tax.categories) j["categories"].push_back({{"id", c.id}, {"name", c.name}});
  j["keywords"] = json::object();
  for (const auto& [w, ids] : tax.keywords) j["keywords"][w] = ids;
  j["excluded"] = tax.excluded;
  j["dim"] = tax.dim;
  j["centroids"] = sidecar;

  std::string bin(kCentroidMagic, sizeof(kCentroidMagic));
  put(bin, tax.centroids.size());
  put(bin, tax.dim);
  for (const auto& c : tax.categories) {
    const auto& v = tax.centroids.at(c.id);
    for (double x : v) put(bin, std::bit_cast<std::uint64_t>(x));
  }
  io::write_file_atomic(path.parent_path() / sidecar, bin);
  io::write_file_atomic(path, j.dump(2) + "\n");
}

CategoryTaxonomy load_taxonomy(const std::filesystem::path& path) {
  CategoryTaxonomy tax;
  std::string sidecar;
  try {
    const json j = json::parse(io::read_file(path));
    for (const auto& c : j.at("categories")) {
      tax.categories.push_back({c.at("id").get<std::string>(), c.at("name").get<std::string>()});
    }
    for (const auto& [w, ids] : j.at("keywords").items()) {
      tax.keywords[w] = ids.get<std::set<std::string>>();
    }
    tax.excluded = j.at("excluded").get<std::vector<std::string>>();
    tax.dim = j.at("dim").get<std::size_t>();
    sidecar = j.at("centroids").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
  const std::string bin = io::read_file(path.parent_path() / sidecar);
  if (bin.compare(0, sizeof(kCentroidMagic), kCentroidMagic, sizeof(kCentroidMagic)) != 0) {
    throw ValidationError("not a centroid file");
  }
  std::size_t pos = sizeof(kCentroidMagic);
  const auto n = get(bin, pos);
  const auto d = get(bin, pos);
  if (n != tax.categories.size() || d != tax.dim) {
    throw ValidationError("centroid file does not match the taxonomy");
  }
  for (const auto& c : tax.categories) {
    retrieval::Vec v(tax.dim);
    for (double& x : v) x = std::bit_cast<double>(get(bin, pos));
    tax.centroids[c.id] = std::move(v);
  }
  if (pos != bin.size()) throw ValidationError("trailing bytes in centroid file");
  return tax;
}

}  // namespace tagrec::taxonomy
