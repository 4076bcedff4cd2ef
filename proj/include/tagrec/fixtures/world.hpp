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

// A small synthetic shop: twelve categories whose title vocabularies are
// pairwise disjoint, a 240-item catalog, and users with a few favorite
// categories. Used for the shipped dataset, the stub provider's fixture
// bank and tests.

#ifndef TAGREC_FIXTURES_WORLD_HPP_
#define TAGREC_FIXTURES_WORLD_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tagrec/common/time.hpp"
#include "tagrec/events/event_store.hpp"
#include "tagrec/llm/stub_provider.hpp"

namespace tagrec::fixtures {

struct CategorySpec {
  std::string id;
  std::string name;
  std::string interest;
  std::vector<std::string> cores;      // two-token core words
  std::vector<std::string> modifiers;  // single tokens
};

const std::vector<CategorySpec>& categories();
const CategorySpec* find_category(std::string_view id);

struct CatalogItem {
  std::string item_id;
  std::string title;  // "{modA} {modB} {core}"
  std::string tag;    // "{modA} {core}"
  std::string category;
  std::string brand;
  double price = 0.0;
  double sales = 0.0;
  std::vector<std::pair<std::string, std::string>> attrs;
};

// 20 items per category, ids i0001..i0240.
std::vector<CatalogItem> catalog();

struct SyntheticUser {
  std::string user_id;
  int age = 0;
  std::string gender;
  std::string location;
  std::vector<std::string> favorite_categories;
};

struct EvalCase {
  std::string user_id;
  Timestamp cutoff = 0;
  std::string gt_category;
};

struct World {
  Timestamp now = 0;
  std::vector<CatalogItem> items;
  std::vector<SyntheticUser> users;
  std::vector<events::UserEvent> events;  // sorted by (user, ts)
  std::vector<EvalCase> eval;
};

struct WorldOptions {
  std::size_t users = 60;
  std::size_t min_events = 50;
  std::size_t max_events = 110;
  std::uint64_t seed = 7;
  Timestamp now = 0;  // 0 -> kDefaultNow
};

// 2025-11-20T00:00:00Z.
inline constexpr Timestamp kDefaultNow = 1763596800;

World generate_world(const WorldOptions& opts = {});

// Writes catalog.jsonl, events.jsonl, interactions.jsonl, users.jsonl,
// eval.jsonl and taxonomy.json into `dir`.
void write_world(const World& w, const std::filesystem::path& dir);

// The stub's fixture bank drawn from the same lexicon: tags per interest,
// filler interests, six-to-ten character explanations.
llm::StubBank stub_bank();

}  // namespace tagrec::fixtures

#endif  // TAGREC_FIXTURES_WORLD_HPP_
