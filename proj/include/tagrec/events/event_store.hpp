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

#ifndef TAGREC_EVENTS_EVENT_STORE_HPP_
#define TAGREC_EVENTS_EVENT_STORE_HPP_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tagrec/common/time.hpp"

namespace tagrec::events {

enum class BehaviorKind {
  kFavorite,
  kPurchase,
  kAddToCart,
  kDetailView,
  kReviewRead,
  kSearch,
  kOrdinaryClick,
};

inline constexpr BehaviorKind kAllBehaviors[] = {
    BehaviorKind::kFavorite,   BehaviorKind::kPurchase,
    BehaviorKind::kAddToCart,  BehaviorKind::kDetailView,
    BehaviorKind::kReviewRead, BehaviorKind::kSearch,
    BehaviorKind::kOrdinaryClick};

// Every declared kind except ordinary clicks signals deliberate intent.
constexpr bool reliable(BehaviorKind k) {
  return k != BehaviorKind::kOrdinaryClick;
}

std::string_view to_string(BehaviorKind k);
std::optional<BehaviorKind> parse_behavior(std::string_view s);

struct UserEvent {
  std::string user_id;
  std::optional<std::string> item_id;  // absent for search events
  BehaviorKind behavior = BehaviorKind::kOrdinaryClick;
  Timestamp timestamp = 0;
  std::string query_text;  // search events only
  std::string item_title;
  std::string category_id;
  std::optional<std::string> brand;
  std::optional<double> price;
  std::vector<std::pair<std::string, std::string>> attributes;

  bool operator==(const UserEvent&) const = default;
};

struct BehaviorLog {
  std::string user_id;
  std::vector<UserEvent> events;  // sorted non-decreasing by timestamp

  bool operator==(const BehaviorLog&) const = default;
};

// Returns an empty string when the event satisfies the record invariants,
// otherwise the human-readable reason it does not.
std::string validate(const UserEvent& e);

// Canonical one-line JSON. Field order is fixed:
// user_id, item_id, behavior, ts, query, title, category, brand, price, attrs
// (absent fields omitted).
std::string to_jsonl(const UserEvent& e);

// Parses one JSONL record. Throws ValidationError with the reject reason.
UserEvent from_jsonl(std::string_view line);

struct Reject {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::vector<Reject> rejects;
};

BehaviorLog reliable_filter(const BehaviorLog& log);

// Events with since <= timestamp < until. Throws RangeError when
// since > until.
BehaviorLog window(const BehaviorLog& log, Timestamp since, Timestamp until);

// Append-only per-user JSONL files under `root/users/` plus an in-memory
// index. Readers get copies (immutable snapshots); appends take the
// writer lock.
class EventStore {
 public:
  // In-memory only; nothing is persisted.
  EventStore() = default;
  // Opens (creating if needed) a store directory and loads existing logs.
  explicit EventStore(std::filesystem::path root);

  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  IngestReport ingest(std::istream& in);
  // Validates and appends one event; throws ValidationError if invalid.
  void append(const UserEvent& e);

  std::optional<BehaviorLog> log(std::string_view user_id) const;
  std::vector<std::string> users() const;
  std::size_t event_count() const;

  const std::optional<std::filesystem::path>& root() const { return root_; }

 private:
  void append_locked(const UserEvent& e);

  std::optional<std::filesystem::path> root_;
  mutable std::shared_mutex mu_;
  std::map<std::string, BehaviorLog, std::less<>> logs_;
};

}  // namespace tagrec::events

#endif  // TAGREC_EVENTS_EVENT_STORE_HPP_
