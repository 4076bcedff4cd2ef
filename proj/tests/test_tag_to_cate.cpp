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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <unistd.h>

#include "support/oracles.hpp"
#include "tagrec/common/error.hpp"
#include "tagrec/fixtures/world.hpp"
#include "tagrec/retrieval/train.hpp"
#include "tagrec/taxonomy/tag_to_cate.hpp"

using namespace tagrec;
using namespace tagrec::retrieval;
using namespace tagrec::taxonomy;

namespace {

Catalog small_catalog() {
  return Catalog({{"i1", "red wool scarf", "wool scarf", "c1", "b1", 10, 1, {}},
                  {"i2", "blue wool hat", "wool hat", "c1", "b2", 12, 2, {}},
                  {"i3", "green tea tin", "green tea", "c2", "b1", 5, 3, {}},
                  {"i4", "black tea bag", "black tea", "c2", "b2", 6, 4, {}}});
}

TriTowerModel model_for(const Catalog& c) {
  Dataset ds;
  ds.catalog = c;
  ds.users = {"u"};
  ds.index();
  ModelConfig cfg;
  cfg.emb_dim = 4;
  cfg.out_dim = 6;
  return build_model(cfg, ds);
}

Catalog world_catalog() {
  std::vector<Item> items;
  for (const auto& it : fixtures::catalog()) {
    items.push_back({it.item_id, it.title, it.tag, it.category, it.brand, it.price, it.sales, it.attrs});
  }
  return Catalog(std::move(items));
}

}  // namespace

TEST_CASE("centroids are category means") {
  const Catalog c = small_catalog();
  const TriTowerModel m = model_for(c);
  const CategoryTaxonomy tax = build_taxonomy(c, m, {{"c1", "Winter wear"}, {"c9", "Empty"}});
  REQUIRE(tax.centroids.size() == 2);
  CHECK(tax.excluded == std::vector<std::string>{"c9"});
  CHECK(tax.find("c1")->name == "Winter wear");
  CHECK(tax.find("c2")->name == "c2");
  for (const auto& [cat, members] : c.by_category()) {
    Vec mean(6, 0.0);
    for (std::size_t i : members) {
      const Vec h = oracle::h_item(m, m.encode_item(features_of(c.at(i))));
      for (std::size_t k = 0; k < 6; ++k) mean[k] += h[k] / members.size();
    }
    for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(tax.centroids.at(cat)[k] - mean[k]) <= 1e-9);
  }
  CHECK(tax.keywords.at("winter") == std::set<std::string>{"c1"});
  CHECK_THROWS_AS(build_taxonomy(Catalog(std::vector<Item>{}), m), ValidationError);
}

TEST_CASE("keyword hits decide unambiguous tags") {
  const Catalog c = small_catalog();
  const TriTowerModel m = model_for(c);
  const CategoryTaxonomy tax = build_taxonomy(c, m);
  CHECK(map_tag_detail(tax, m, "cozy wool scarf").route == MapRoute::kKeyword);
  CHECK(map_tag(tax, m, "cozy wool scarf") == "c1");
  CHECK(map_tag(tax, m, "oolong tea") == "c2");
  CHECK(core_tokens("a b c d") == std::vector<std::string>{"c", "d"});
}

TEST_CASE("ambiguous tags fall back to the nearest centroid") {
  const Catalog c = small_catalog();
  const TriTowerModel m = model_for(c);
  const CategoryTaxonomy tax = build_taxonomy(c, m);
  for (const char* tag : {"wool tea", "gadget", "", "black scarf"}) {
    const Mapping got = map_tag_detail(tax, m, tag);
    CHECK(got.route == MapRoute::kCentroid);
    const Vec ht = oracle::h_tag(m, m.encode_tag(tag));
    std::string best;
    double bs = -1e300;
    for (const auto& [id, cen] : tax.centroids) {
      const double s = oracle::dot(ht, cen);
      if (s > bs) {
        bs = s;
        best = id;
      }
    }
    CHECK(got.category == best);
    CHECK(map_tag(tax, m, tag) == got.category);
  }
  // Equal centroids: the lower id wins.
  CategoryTaxonomy tie = tax;
  tie.centroids["c2"] = tie.centroids["c1"];
  CHECK(map_tag(tie, m, "gadget") == "c1");
}

TEST_CASE("item titles map to their own category on the fixture catalog") {
  const Catalog c = world_catalog();
  Dataset ds;
  ds.catalog = c;
  ds.index();
  const TriTowerModel m = build_model(ModelConfig{}, ds);
  const CategoryTaxonomy tax = build_taxonomy(c, m);
  for (const auto& it : c.items()) {
    CHECK(map_tag(tax, m, it.title) == it.category);
    CHECK(map_tag(tax, m, it.tag) == it.category);
  }
}

TEST_CASE("taxonomy persistence round-trips") {
  const Catalog c = small_catalog();
  const TriTowerModel m = model_for(c);
  const CategoryTaxonomy tax = build_taxonomy(c, m, {{"c1", "Winter wear"}});
  const auto dir = std::filesystem::temp_directory_path() /
                   ("tagrec_tax_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  save_taxonomy(tax, dir / "tax.json");
  CHECK(std::filesystem::exists(dir / "tax.json.centroids"));
  const CategoryTaxonomy r = load_taxonomy(dir / "tax.json");
  CHECK(r.categories == tax.categories);
  CHECK(r.keywords == tax.keywords);
  CHECK(r.centroids == tax.centroids);
  CHECK(r.dim == tax.dim);
  for (const char* tag : {"wool tea", "green tea", "x"}) CHECK(map_tag(r, m, tag) == map_tag(tax, m, tag));
  std::filesystem::remove_all(dir);
}
