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

#include "tagrec/retrieval/dataset.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"

namespace tagrec::retrieval {

using nlohmann::json;

Catalog::Catalog(std::vector<Item> items) : items_(std::move(items)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const Item& it = items_[i];
    if (it.item_id.empty()) throw ValidationError("catalog item without item_id");
    if (!index_.emplace(it.item_id, i).second) {
      throw ValidationError(fmt::format("duplicate item_id '{}'", it.item_id));
    }
    by_category_[it.category].push_back(i);
  }
}

std::size_t Catalog::find(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  return it == index_.end() ? npos : it->second;
}

const Item* Catalog::get(std::string_view item_id) const {
  const std::size_t i = find(item_id);
  return i == npos ? nullptr : &items_[i];
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::vector<Item> items;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Item it;
      it.item_id = j.at("item_id").get<std::string>();
      it.title = j.value("title", "");
      it.tag = j.value("tag", "");
      it.category = j.value("category", "");
      it.brand = j.value("brand", "");
      it.price = j.value("price", 0.0);
      it.sales = j.value("sales", 0.0);
      if (auto a = j.find("attrs"); a != j.end() && a->is_object()) {
        for (const auto& [k, v] : a->items()) {
          it.attrs.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
        }
      }
      items.push_back(std::move(it));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()), line);
    }
  }
  return Catalog(std::move(items));
}

ItemFeatures features_of(const Item& item) {
  ItemFeatures f;
  f.sparse["item_id"] = item.item_id;
  f.sparse["category"] = item.category;
  f.sparse["brand"] = item.brand;
  f.dense["price"] = item.price;
  f.dense["sales"] = item.sales;
  return f;
}

void Dataset::index() {
  std::stable_sort(interactions.begin(), interactions.end(),
                   [](const Interaction& a, const Interaction& b) {
                     if (a.user_id != b.user_id) return a.user_id < b.user_id;
                     return a.ts < b.ts;
                   });
  ranges_.clear();
  std::set<std::string> ids(users.begin(), users.end());
  for (std::size_t i = 0; i < interactions.size();) {
    std::size_t j = i;
    while (j < interactions.size() && interactions[j].user_id == interactions[i].user_id) ++j;
    ranges_[interactions[i].user_id] = {i, j};
    ids.insert(interactions[i].user_id);
    i = j;
  }
  users.assign(ids.begin(), ids.end());
}

std::vector<std::vector<std::size_t>> Dataset::history(
    std::string_view user_id, Timestamp before, const std::vector<std::string>& behaviors,
    std::size_t max_per_slot) const {
  std::vector<std::vector<std::size_t>> out(behaviors.size());
  auto r = ranges_.find(std::string(user_id));
  if (r == ranges_.end()) return out;
  for (std::size_t i = r->second.second; i > r->second.first; --i) {
    const Interaction& x = interactions[i - 1];
    if (x.ts >= before) continue;
    for (std::size_t s = 0; s < behaviors.size(); ++s) {
      if (behaviors[s] == x.behavior && out[s].size() < max_per_slot) out[s].push_back(x.item);
    }
  }
  for (auto& slot : out) std::reverse(slot.begin(), slot.end());
  return out;
}

std::vector<std::string> Dataset::tags() const {
  std::set<std::string> out;
  for (const auto& it : catalog.items()) {
    if (!it.tag.empty()) out.insert(it.tag);
  }
  return {out.begin(), out.end()};
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.catalog = load_catalog(dir / "catalog.jsonl");
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(dir / "interactions.jsonl")) {
    ++line_no;
    if (line.empty()) continue;
    Interaction x;
    std::string item_id;
    try {
      const json j = json::parse(line);
      x.user_id = j.at("user_id").get<std::string>();
      item_id = j.at("item_id").get<std::string>();
      x.behavior = j.value("behavior", "click");
      x.ts = j.at("ts").get<Timestamp>();
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("interactions.jsonl:{}: {}", line_no, e.what()), line);
    }
    x.item = ds.catalog.find(item_id);
    if (x.item == Catalog::npos) {
      throw ValidationError(
          fmt::format("interactions.jsonl:{}: unknown item '{}'", line_no, item_id));
    }
    ds.interactions.push_back(std::move(x));
  }
  const auto users_path = dir / "users.jsonl";
  if (std::filesystem::exists(users_path)) {
    for (const auto& line : io::read_lines(users_path)) {
      if (line.empty()) continue;
      try {
        ds.users.push_back(json::parse(line).at("user_id").get<std::string>());
      } catch (const json::exception& e) {
        throw ParseError(fmt::format("users.jsonl: {}", e.what()), line);
      }
    }
  }
  ds.index();
  return ds;
}

}  // namespace tagrec::retrieval
