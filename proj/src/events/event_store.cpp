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

#include "tagrec/events/event_store.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"

namespace tagrec::events {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kBehaviorNames[] = {
    "favorite",  "purchase",    "add_to_cart",   "detail_view",
    "review_read", "search", "ordinary_click"};

constexpr std::string_view kFields[] = {"user_id", "item_id", "behavior",
                                        "ts",      "query",   "title",
                                        "category", "brand",  "price",
                                        "attrs"};

bool known_field(std::string_view key) {
  return std::find(std::begin(kFields), std::end(kFields), key) !=
         std::end(kFields);
}

void insert_sorted(BehaviorLog& log, const UserEvent& e) {
  // Stable with respect to arrival order for equal timestamps.
  auto it = std::upper_bound(
      log.events.begin(), log.events.end(), e.timestamp,
      [](Timestamp ts, const UserEvent& x) { return ts < x.timestamp; });
  log.events.insert(it, e);
}

}  // namespace

std::string_view to_string(BehaviorKind k) {
  return kBehaviorNames[static_cast<int>(k)];
}

std::optional<BehaviorKind> parse_behavior(std::string_view s) {
  for (BehaviorKind k : kAllBehaviors) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string validate(const UserEvent& e) {
  if (e.user_id.empty()) return "missing user_id";
  if (e.timestamp <= 0) return "timestamp must be positive";
  if (e.behavior == BehaviorKind::kSearch) {
    if (e.query_text.empty()) return "search event requires query";
    if (e.item_id) return "search event must not carry item_id";
  } else {
    if (!e.item_id || e.item_id->empty()) return "missing item_id";
  }
  if (e.price && (!std::isfinite(*e.price) || *e.price < 0)) {
    return "price must be non-negative";
  }
  return {};
}

std::string to_jsonl(const UserEvent& e) {
  ojson j = ojson::object();
  j["user_id"] = e.user_id;
  if (e.item_id) j["item_id"] = *e.item_id;
  j["behavior"] = std::string(to_string(e.behavior));
  j["ts"] = e.timestamp;
  if (!e.query_text.empty()) j["query"] = e.query_text;
  if (!e.item_title.empty()) j["title"] = e.item_title;
  if (!e.category_id.empty()) j["category"] = e.category_id;
  if (e.brand) j["brand"] = *e.brand;
  if (e.price) j["price"] = *e.price;
  if (!e.attributes.empty()) {
    ojson attrs = ojson::object();
    for (const auto& [k, v] : e.attributes) attrs[k] = v;
    j["attrs"] = std::move(attrs);
  }
  return j.dump();
}

UserEvent from_jsonl(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::parse_error&) {
    throw ValidationError("malformed json");
  }
  if (!j.is_object()) throw ValidationError("record is not an object");
  for (const auto& [key, _] : j.items()) {
    if (!known_field(key)) {
      throw ValidationError(fmt::format("unknown field '{}'", key));
    }
  }
  auto text = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_string()) {
      throw ValidationError(fmt::format("field '{}' must be a string", key));
    }
    return j[key].get<std::string>();
  };

  UserEvent e;
  auto user = text("user_id");
  if (!user || user->empty()) throw ValidationError("missing user_id");
  e.user_id = *user;
  if (!j.contains("ts")) throw ValidationError("missing timestamp");
  if (!j["ts"].is_number_integer()) {
    throw ValidationError("timestamp must be an integer");
  }
  e.timestamp = j["ts"].get<Timestamp>();
  auto behavior = text("behavior");
  if (!behavior) throw ValidationError("missing behavior");
  auto kind = parse_behavior(*behavior);
  if (!kind) {
    throw ValidationError(fmt::format("unknown behavior '{}'", *behavior));
  }
  e.behavior = *kind;
  e.item_id = text("item_id");
  e.query_text = text("query").value_or("");
  e.item_title = text("title").value_or("");
  e.category_id = text("category").value_or("");
  e.brand = text("brand");
  if (j.contains("price")) {
    if (!j["price"].is_number()) throw ValidationError("price must be numeric");
    e.price = j["price"].get<double>();
  }
  if (j.contains("attrs")) {
    if (!j["attrs"].is_object()) {
      throw ValidationError("attrs must be an object");
    }
    for (const auto& [k, v] : j["attrs"].items()) {
      if (!v.is_string()) throw ValidationError("attribute values must be strings");
      e.attributes.emplace_back(k, v.get<std::string>());
    }
  }
  if (auto reason = validate(e); !reason.empty()) throw ValidationError(reason);
  return e;
}

BehaviorLog reliable_filter(const BehaviorLog& log) {
  BehaviorLog out{log.user_id, {}};
  for (const auto& e : log.events) {
    if (reliable(e.behavior)) out.events.push_back(e);
  }
  return out;
}

BehaviorLog window(const BehaviorLog& log, Timestamp since, Timestamp until) {
  if (since > until) {
    throw RangeError(fmt::format("window since {} is after until {}", since,
                                 until));
  }
  BehaviorLog out{log.user_id, {}};
  for (const auto& e : log.events) {
    if (e.timestamp >= since && e.timestamp < until) out.events.push_back(e);
  }
  return out;
}

EventStore::EventStore(fs::path root) : root_(std::move(root)) {
  const fs::path users = *root_ / "users";
  fs::create_directories(users);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(users)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::size_t n = 0;
    for (const auto& line : io::read_lines(file)) {
      ++n;
      if (line.empty()) continue;
      try {
        UserEvent e = from_jsonl(line);
        auto& log = logs_[e.user_id];
        log.user_id = e.user_id;
        insert_sorted(log, e);
      } catch (const ValidationError& err) {
        throw IoError(fmt::format("corrupt store file {}:{}: {}",
                                  file.string(), n, err.what()));
      }
    }
  }
}

void EventStore::append_locked(const UserEvent& e) {
  auto& log = logs_[e.user_id];
  log.user_id = e.user_id;
  insert_sorted(log, e);
  if (root_) {
    io::append_line(*root_ / "users" / (io::encode_filename(e.user_id) + ".jsonl"),
                    to_jsonl(e));
  }
}

void EventStore::append(const UserEvent& e) {
  if (auto reason = validate(e); !reason.empty()) throw ValidationError(reason);
  std::unique_lock lock(mu_);
  append_locked(e);
}

IngestReport EventStore::ingest(std::istream& in) {
  IngestReport report;
  std::string line;
  std::size_t n = 0;
  std::unique_lock lock(mu_);
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      report.rejects.push_back({n, "empty line"});
      continue;
    }
    try {
      append_locked(from_jsonl(line));
      ++report.accepted;
    } catch (const ValidationError& err) {
      report.rejects.push_back({n, err.what()});
    }
  }
  return report;
}

std::optional<BehaviorLog> EventStore::log(std::string_view user_id) const {
  std::shared_lock lock(mu_);
  auto it = logs_.find(user_id);
  if (it == logs_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> EventStore::users() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  out.reserve(logs_.size());
  for (const auto& [id, _] : logs_) out.push_back(id);
  return out;
}

std::size_t EventStore::event_count() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, log] : logs_) n += log.events.size();
  return n;
}

}  // namespace tagrec::events
