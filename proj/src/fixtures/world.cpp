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

#include "tagrec/fixtures/world.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/random.hpp"

namespace tagrec::fixtures {

using ojson = nlohmann::ordered_json;
using events::BehaviorKind;

namespace {

const double kBasePrice[] = {89, 65, 40, 30, 55, 120, 25, 35, 70, 20, 30, 28};

const char* const kBrands[] = {"Acme", "Borealis", "Cobalt", "Dune",
                               "Ember", "Fjord"};
const char* const kColors[] = {"black", "white", "green", "blue", "red"};
const char* const kOrigins[] = {"domestic", "imported"};
const char* const kSizes[] = {"small", "medium", "large"};
const char* const kCities[] = {"Hangzhou", "Shanghai", "Beijing", "Chengdu",
                               "Shenzhen", "Wuhan"};

struct Mix {
  BehaviorKind kind;
  double weight;
};

// Ordinary clicks dominate, as in real logs.
const Mix kBehaviorMix[] = {
    {BehaviorKind::kOrdinaryClick, 0.38}, {BehaviorKind::kDetailView, 0.15},
    {BehaviorKind::kFavorite, 0.08},      {BehaviorKind::kAddToCart, 0.10},
    {BehaviorKind::kPurchase, 0.10},      {BehaviorKind::kReviewRead, 0.07},
    {BehaviorKind::kSearch, 0.12},
};

BehaviorKind draw_behavior(Rng& rng) {
  double u = rng.uniform01();
  for (const auto& m : kBehaviorMix) {
    if (u < m.weight) return m.kind;
    u -= m.weight;
  }
  return BehaviorKind::kOrdinaryClick;
}

// Ages in days: a recent burst, a mid-range body and a long tail.
Timestamp draw_age(Rng& rng) {
  const double u = rng.uniform01();
  double days;
  if (u < 0.40) {
    days = rng.uniform(0.05, 30.0);
  } else if (u < 0.75) {
    days = rng.uniform(30.0, 365.0);
  } else {
    days = rng.uniform(365.0, 800.0);
  }
  return static_cast<Timestamp>(days * kSecondsPerDay);
}

std::size_t pick_category(Rng& rng, const SyntheticUser& u,
                          const std::vector<CategorySpec>& cats) {
  if (rng.uniform01() < 0.8) {
    const auto& id = u.favorite_categories[rng.uniform_index(u.favorite_categories.size())];
    for (std::size_t i = 0; i < cats.size(); ++i) {
      if (cats[i].id == id) return i;
    }
  }
  return rng.uniform_index(cats.size());
}

std::string tag_of(const CategorySpec& c, std::size_t mod, std::size_t core) {
  return c.modifiers[mod] + " " + c.cores[core];
}

}  // namespace

const std::vector<CategorySpec>& categories() {
  static const std::vector<CategorySpec> kCats = {
      {"c01", "Tennis Gear", "tennis",
       {"tennis racket", "tennis balls", "overgrip tape", "string dampener"},
       {"graphite", "tournament", "pressurized", "oversized", "pro"}},
      {"c02", "Hiking Outdoors", "hiking",
       {"hiking boots", "trekking poles", "trail backpack", "camping headlamp"},
       {"waterproof", "nonslip", "ultralight", "rugged", "breathable"}},
      {"c03", "Home Cooking", "cooking",
       {"iron skillet", "chef knife", "cutting board", "stock pot"},
       {"nonstick", "stainless", "forged", "bamboo", "enameled"}},
      {"c04", "Yoga Fitness", "yoga",
       {"yoga mat", "yoga blocks", "resistance bands", "foam roller"},
       {"cork", "thick", "eco", "grippy", "foldable"}},
      {"c05", "Coffee Brewing", "coffee",
       {"gooseneck kettle", "burr grinder", "espresso machine", "coffee beans"},
       {"manual", "ceramic", "programmable", "roasted", "barista"}},
      {"c06", "Photography", "photography",
       {"camera lens", "camera strap", "tripod mount", "memory card"},
       {"wide", "telephoto", "carbon", "padded", "mirrorless"}},
      {"c07", "Cat Supplies", "cat ownership",
       {"cat litter", "scratching post", "cat tree", "pet fountain"},
       {"clumping", "sisal", "multilevel", "quiet", "odorless"}},
      {"c08", "Skincare", "skincare",
       {"face serum", "sunscreen lotion", "night cream", "facial cleanser"},
       {"hydrating", "gentle", "vitamin", "fragrancefree", "brightening"}},
      {"c09", "Winter Apparel", "winter season",
       {"down parka", "thermal gloves", "wool scarf", "knit beanie"},
       {"insulated", "windproof", "fleece", "heated", "cozy"}},
      {"c10", "Swimming", "swimming",
       {"swim goggles", "swim cap", "beach towel", "kickboard float"},
       {"antifog", "chlorineproof", "quickdry", "silicone", "racing"}},
      {"c11", "Board Games", "board games",
       {"strategy boardgame", "party cardgame", "chess pieces", "jigsaw puzzle"},
       {"cooperative", "family", "deluxe", "wooden", "classic"}},
      {"c12", "Gardening", "gardening",
       {"seed starter", "pruning shears", "garden hose", "raised planter"},
       {"organic", "heavy", "expandable", "galvanized", "ergonomic"}},
  };
  return kCats;
}

const CategorySpec* find_category(std::string_view id) {
  for (const auto& c : categories()) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::vector<CatalogItem> catalog() {
  std::vector<CatalogItem> items;
  const auto& cats = categories();
  std::size_t n = 0;
  for (std::size_t ci = 0; ci < cats.size(); ++ci) {
    const auto& c = cats[ci];
    for (std::size_t k = 0; k < 20; ++k) {
      const std::size_t core = k % 4;
      const std::size_t mod_a = k / 4;
      const std::size_t mod_b = (mod_a + 1 + core) % 5;
      ++n;
      CatalogItem it;
      it.item_id = fmt::format("i{:04d}", n);
      it.title = fmt::format("{} {} {}", c.modifiers[mod_a], c.modifiers[mod_b],
                             c.cores[core]);
      it.tag = tag_of(c, mod_a, core);
      it.category = c.id;
      it.brand = kBrands[(ci + k) % 6];
      it.price = std::round(kBasePrice[ci] * (0.6 + 0.1 * static_cast<double>(k % 9)) *
                            100.0) / 100.0;
      it.sales = static_cast<double>(50 + ((n * 37) % 900));
      it.attrs = {{"color", kColors[(ci + k) % 5]},
                  {"size", kSizes[k % 3]},
                  {"origin", kOrigins[(ci * 3 + k) % 2]},
                  {"warranty", k % 2 == 0 ? "1y" : "2y"}};
      items.push_back(std::move(it));
    }
  }
  return items;
}

World generate_world(const WorldOptions& opts) {
  if (opts.users == 0) throw ValidationError("world needs at least one user");
  if (opts.min_events == 0 || opts.min_events > opts.max_events) {
    throw ValidationError("invalid event count range");
  }
  World w;
  w.now = opts.now == 0 ? kDefaultNow : opts.now;
  w.items = catalog();
  const auto& cats = categories();

  std::vector<std::vector<const CatalogItem*>> by_cat(cats.size());
  for (const auto& it : w.items) {
    for (std::size_t i = 0; i < cats.size(); ++i) {
      if (cats[i].id == it.category) by_cat[i].push_back(&it);
    }
  }

  Rng rng(opts.seed);
  for (std::size_t u = 0; u < opts.users; ++u) {
    SyntheticUser user;
    user.user_id = fmt::format("u{:03d}", u + 1);
    user.age = 18 + static_cast<int>(rng.uniform_index(50));
    user.gender = rng.uniform01() < 0.5 ? "female" : "male";
    user.location = kCities[rng.uniform_index(6)];
    const std::size_t nfav = 2 + rng.uniform_index(3);
    for (std::size_t idx : rng.sample_without_replacement(cats.size(), nfav)) {
      user.favorite_categories.push_back(cats[idx].id);
    }

    Rng urng(mix_seed(opts.seed, user.user_id));
    const std::size_t n =
        opts.min_events + urng.uniform_index(opts.max_events - opts.min_events + 1);
    std::vector<events::UserEvent> evs;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ci = pick_category(urng, user, cats);
      const auto& c = cats[ci];
      events::UserEvent e;
      e.user_id = user.user_id;
      e.behavior = draw_behavior(urng);
      e.timestamp = w.now - 1 - draw_age(urng);
      e.category_id = c.id;
      if (e.behavior == BehaviorKind::kSearch) {
        const std::size_t core = urng.uniform_index(4);
        e.query_text = urng.uniform01() < 0.5
                           ? c.cores[core]
                           : tag_of(c, urng.uniform_index(5), core);
      } else {
        const CatalogItem* it = by_cat[ci][urng.uniform_index(by_cat[ci].size())];
        e.item_id = it->item_id;
        e.item_title = it->title;
        e.brand = it->brand;
        e.price = it->price;
        e.attributes = it->attrs;
      }
      evs.push_back(std::move(e));
    }
    std::stable_sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) {
      return a.timestamp < b.timestamp;
    });
    for (auto& e : evs) w.events.push_back(std::move(e));

    // Category of the held-out next interaction after the cutoff.
    const std::size_t ci = pick_category(urng, user, cats);
    w.eval.push_back({user.user_id, w.now, cats[ci].id});
    w.users.push_back(std::move(user));
  }
  return w;
}

void write_world(const World& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::string catalog_out;
  for (const auto& it : w.items) {
    ojson attrs = ojson::object();
    for (const auto& [k, v] : it.attrs) attrs[k] = v;
    catalog_out += ojson{{"item_id", it.item_id},  {"title", it.title},
                         {"tag", it.tag},          {"category", it.category},
                         {"brand", it.brand},      {"price", it.price},
                         {"sales", it.sales},      {"attrs", attrs}}
                       .dump();
    catalog_out += '\n';
  }
  io::write_file_atomic(dir / "catalog.jsonl", catalog_out);

  std::string events_out;
  std::string inter_out;
  for (const auto& e : w.events) {
    events_out += events::to_jsonl(e);
    events_out += '\n';
    if (!e.item_id) continue;
    const char* slot = e.behavior == BehaviorKind::kPurchase ? "purchase" : "click";
    inter_out += ojson{{"user_id", e.user_id},
                       {"item_id", *e.item_id},
                       {"behavior", slot},
                       {"ts", e.timestamp}}
                     .dump();
    inter_out += '\n';
  }
  io::write_file_atomic(dir / "events.jsonl", events_out);
  io::write_file_atomic(dir / "interactions.jsonl", inter_out);

  std::string users_out;
  for (const auto& u : w.users) {
    users_out += ojson{{"user_id", u.user_id},
                       {"age", u.age},
                       {"gender", u.gender},
                       {"location", u.location}}
                     .dump();
    users_out += '\n';
  }
  io::write_file_atomic(dir / "users.jsonl", users_out);

  std::string eval_out;
  for (const auto& c : w.eval) {
    eval_out += ojson{{"user_id", c.user_id},
                      {"cutoff", c.cutoff},
                      {"gt_category", c.gt_category}}
                    .dump();
    eval_out += '\n';
  }
  io::write_file_atomic(dir / "eval.jsonl", eval_out);

  ojson cats = ojson::array();
  for (const auto& c : categories()) {
    cats.push_back(ojson{{"id", c.id}, {"name", c.name}, {"interest", c.interest}});
  }
  io::write_file_atomic(dir / "taxonomy.json",
                        ojson{{"categories", cats}}.dump(2) + "\n");
}

llm::StubBank stub_bank() {
  llm::StubBank bank;
  bank.extra_interests = {"smart home",   "luxury watches", "daily necessities",
                          "fishing",      "car care",       "home office",
                          "vinyl records", "baking",        "video games",
                          "jewelry",      "running",        "calligraphy"};
  for (const auto& c : categories()) {
    auto& lane = bank.tags_by_interest[c.interest];
    for (std::size_t m = 0; m < c.modifiers.size(); ++m) {
      for (std::size_t k = 0; k < c.cores.size(); ++k) {
        lane.push_back(tag_of(c, m, k));
        bank.filler_tags.push_back(tag_of(c, m, k));
      }
    }
    for (const auto& core : c.cores) bank.interest_by_keyword[core] = c.interest;
  }
  bank.explanations = {"轻便出行好伙伴", "居家烹饪好帮手", "运动健身必备之选",
                       "冬日保暖贴心之选", "清晨咖啡仪式感", "记录美好每一刻",
                       "猫咪的快乐天地", "温和呵护每一天", "夏日畅游好搭档",
                       "欢聚时光更有趣", "阳台花园添新绿", "球场制胜好装备"};
  return bank;
}

}  // namespace tagrec::fixtures
