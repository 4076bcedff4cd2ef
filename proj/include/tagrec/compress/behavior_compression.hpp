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

// Lifelong behavior compression: item projection, age-based time buckets,
// the two-step (time, behavior) -> items -> contexts aggregation, a
// canonical text rendering and token budgeting.

#ifndef TAGREC_COMPRESS_BEHAVIOR_COMPRESSION_HPP_
#define TAGREC_COMPRESS_BEHAVIOR_COMPRESSION_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tagrec/common/time.hpp"
#include "tagrec/events/event_store.hpp"

namespace tagrec::compress {

using events::BehaviorKind;

inline constexpr std::size_t kDefaultTokenBudget = 128000;

struct CompressedItem {
  std::string item_id;
  std::string name;
  std::string category;
  std::optional<std::string> brand;
  std::vector<std::pair<std::string, std::string>> extra;

  bool operator==(const CompressedItem&) const = default;
};

struct ItemCompressionConfig {
  std::size_t max_attributes = 3;
  // Attribute keys listed here are kept first, in this order; remaining
  // keys follow in their original order.
  std::vector<std::string> attribute_priority;
};

// Field projection. Missing title falls back to the category; missing both
// throws ValidationError.
CompressedItem compress_item(const events::UserEvent& event,
                             const ItemCompressionConfig& cfg = {});

enum class Granularity { kDaily, kMonthly, kYearly };

struct TimeBucket {
  Granularity granularity = Granularity::kDaily;
  std::string label;
  Timestamp start = 0;  // first second of the bucket, UTC

  bool operator==(const TimeBucket& o) const {
    return granularity == o.granularity && label == o.label;
  }
  auto operator<=>(const TimeBucket& o) const {
    if (auto c = start <=> o.start; c != 0) return c;
    return granularity <=> o.granularity;
  }
};

std::string_view to_string(Granularity g);

// Age under 30 days -> daily, under 365 days -> monthly, else yearly.
// Throws RangeError when ts > now.
TimeBucket assign_bucket(Timestamp ts, Timestamp now);

struct Context {
  TimeBucket bucket;
  BehaviorKind behavior;

  bool operator==(const Context&) const = default;
};

struct CompressedGroup {
  std::vector<CompressedItem> items;
  std::vector<Context> contexts;  // chronological
  Timestamp latest = 0;           // newest underlying event timestamp

  bool operator==(const CompressedGroup&) const = default;
};

struct CompressedBehaviorLog {
  std::string user_id;
  std::vector<CompressedGroup> groups;
  std::string rendered;
  std::size_t token_count = 0;
  bool truncated = false;
};

struct BehaviorEntry {
  CompressedItem item;
  TimeBucket bucket;
  BehaviorKind behavior;
  Timestamp timestamp = 0;
};

using Tokenizer = std::function<std::size_t(std::string_view)>;
std::size_t default_tokenizer(std::string_view s);

// Step 1 groups items by (bucket, behavior) with first-occurrence order
// and per-key de-duplication by item_id; step 2 inverts to ordered
// item-id sequences collecting every context that produced them.
CompressedBehaviorLog dual_aggregate(std::string user_id,
                                     const std::vector<BehaviorEntry>& entries,
                                     const Tokenizer& tokenizer = default_tokenizer);

// group := bucket_list " | " item_list, groups separated by '\n'.
std::string render(const std::vector<CompressedGroup>& groups);
std::string render_item(const CompressedItem& item);

// A group as recovered from text. Item ids and timestamps are not part of
// the rendering, so parsed items carry an empty item_id.
struct ParsedGroup {
  std::vector<CompressedItem> items;
  std::vector<std::pair<std::string, std::vector<BehaviorKind>>> buckets;

  bool operator==(const ParsedGroup&) const = default;
};

// Inverse of render. Throws ParseError on text outside the grammar.
std::vector<ParsedGroup> parse_rendered(std::string_view text);
// The structure render() encodes, for comparison against parse_rendered.
std::vector<ParsedGroup> structure_of(const std::vector<CompressedGroup>& groups);

// Drops whole groups oldest-first (by `latest`) until the rendering fits.
// If the newest group alone is over budget its oldest items are dropped
// and `truncated` is set. Throws RangeError for a zero budget.
CompressedBehaviorLog fit_budget(const CompressedBehaviorLog& log,
                                 std::size_t budget,
                                 const Tokenizer& tokenizer = default_tokenizer);

struct CompressOptions {
  Timestamp now = 0;
  std::size_t budget = kDefaultTokenBudget;
  ItemCompressionConfig item;
  bool reliable_only = true;
};

// Full path for one user: reliable filter, projection, bucketing, dual
// aggregation and budgeting. Search events become items named by their
// query.
CompressedBehaviorLog compress_log(const events::BehaviorLog& log,
                                   const CompressOptions& opts);

}  // namespace tagrec::compress

#endif  // TAGREC_COMPRESS_BEHAVIOR_COMPRESSION_HPP_
