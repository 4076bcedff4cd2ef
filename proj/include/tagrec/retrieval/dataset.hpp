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

// Catalog and interaction data as shipped in a data directory.

#ifndef TAGREC_RETRIEVAL_DATASET_HPP_
#define TAGREC_RETRIEVAL_DATASET_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tagrec/common/time.hpp"
#include "tagrec/retrieval/model.hpp"

namespace tagrec::retrieval {

struct Item {
  std::string item_id;
  std::string title;
  std::string tag;
  std::string category;
  std::string brand;
  double price = 0.0;
  double sales = 0.0;
  std::vector<std::pair<std::string, std::string>> attrs;
};

class Catalog {
 public:
  Catalog() = default;
  // Throws ValidationError on an empty or duplicate item id.
  explicit Catalog(std::vector<Item> items);

  const std::vector<Item>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const Item& at(std::size_t i) const { return items_.at(i); }
  // Index of the item, or npos.
  std::size_t find(std::string_view item_id) const;
  const Item* get(std::string_view item_id) const;
  // Item indices per category, categories sorted.
  const std::map<std::string, std::vector<std::size_t>>& by_category() const {
    return by_category_;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<std::size_t>> by_category_;
};

// catalog.jsonl: {item_id, title, tag, category, brand, price, sales, attrs}.
Catalog load_catalog(const std::filesystem::path& path);

ItemFeatures features_of(const Item& item);

struct Interaction {
  std::string user_id;
  std::size_t item = 0;  // catalog index
  std::string behavior;  // "click" | "purchase"
  Timestamp ts = 0;
};

struct Dataset {
  Catalog catalog;
  std::vector<Interaction> interactions;  // sorted by (user, ts), stable
  std::vector<std::string> users;         // sorted

  // Catalog indices per behavior slot of interactions strictly before
  // `before`, the most recent `max_per_slot` of each.
  std::vector<std::vector<std::size_t>> history(std::string_view user_id, Timestamp before,
                                                const std::vector<std::string>& behaviors,
                                                std::size_t max_per_slot) const;
  std::vector<std::string> tags() const;

  void index();

 private:
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> ranges_;
};

// Reads catalog.jsonl, interactions.jsonl and, when present, users.jsonl.
// Interactions naming unknown items throw ValidationError.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace tagrec::retrieval

#endif  // TAGREC_RETRIEVAL_DATASET_HPP_
