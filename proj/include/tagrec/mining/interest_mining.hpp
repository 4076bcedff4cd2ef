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

// Interest mining: the matched interest pool, one LLM call per user that
// turns attributes and compressed behavior into an interest profile, and
// quality screening of that profile.

#ifndef TAGREC_MINING_INTEREST_MINING_HPP_
#define TAGREC_MINING_INTEREST_MINING_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tagrec/common/time.hpp"
#include "tagrec/compress/behavior_compression.hpp"
#include "tagrec/events/event_store.hpp"
#include "tagrec/judge/buffer.hpp"
#include "tagrec/judge/judge.hpp"
#include "tagrec/llm/gateway.hpp"

namespace tagrec::mining {

struct UserAttributes {
  std::string user_id;
  std::optional<int> age;  // [0, 130]
  std::optional<std::string> gender;
  std::optional<std::string> location;
  std::vector<std::pair<std::string, std::string>> extra;

  bool operator==(const UserAttributes&) const = default;
};

// Throws ValidationError.
void validate(const UserAttributes& a);
// "age: 30; gender: female; location: Hangzhou", or "unknown".
std::string render_attributes(const UserAttributes& a);
nlohmann::json to_json(const UserAttributes& a);
UserAttributes attributes_from_json(const nlohmann::json& j);
// users.jsonl, keyed by user id.
std::map<std::string, UserAttributes> load_users(const std::filesystem::path& path);

// Category id -> interest label, read from taxonomy.json
// ({"categories":[{"id","name","interest"}]}).
using CategoryInterests = std::map<std::string, std::string>;
CategoryInterests load_category_interests(const std::filesystem::path& path);

enum class PoolSource { kTaxonomyMatch, kConfig };

struct InterestPool {
  std::vector<std::string> interests;
  PoolSource source = PoolSource::kTaxonomyMatch;
};

// Up to `m` interest labels whose categories occur in the log. A label's
// frequency is the number of (item, time bucket, behavior) occurrences
// across its categories; ties break by label. Throws ValidationError for
// an empty taxonomy.
InterestPool match_pool(const compress::CompressedBehaviorLog& log,
                        const CategoryInterests& taxonomy, std::size_t m);

struct ProfileInterest {
  std::string label;
  std::string stage;  // stored verbatim
  std::string reason;
  std::optional<judge::QualityVerdict> verdict;

  bool operator==(const ProfileInterest&) const = default;
};

inline constexpr const char* kFlagUnderFloor = "under_floor";
inline constexpr const char* kFlagEmpty = "empty";
inline constexpr const char* kFlagUnscreened = "unscreened";
inline constexpr const char* kFlagRepaired = "repaired";

struct InterestProfile {
  std::string user_id;
  std::vector<ProfileInterest> interests;  // labels unique, case-folded
  Timestamp generated_at = 0;
  std::vector<std::string> flags;

  bool has_flag(std::string_view f) const;
  std::vector<std::string> labels() const;
  bool operator==(const InterestProfile&) const = default;
};

// Interests whose verdict passed, in profile order.
std::vector<ProfileInterest> filtered(const InterestProfile& p);
// |filtered| / |interests|; nullopt for an empty profile.
std::optional<double> pass_rate(const InterestProfile& p);

struct MiningOptions {
  std::size_t floor = 10;  // fewer interests sets kFlagUnderFloor
  std::optional<std::uint64_t> seed = 0;
  double temperature = 0.0;
  const llm::PromptTemplate* tmpl = nullptr;  // default template if null
  Timestamp now = 0;
};

// One gateway call. Duplicate labels (case-folded) keep the first entry.
// ParseError from the model output propagates with the raw text.
InterestProfile mine_interests(llm::LlmGateway& gateway, const UserAttributes& attrs,
                               const compress::CompressedBehaviorLog& log,
                               const InterestPool& pool, const MiningOptions& opts = {});

// Reliable events as [{title, category}], de-duplicated, oldest first;
// search events contribute their query as the title.
nlohmann::json judge_history(const events::BehaviorLog& log);

nlohmann::json interest_payload(const ProfileInterest& interest,
                                const nlohmann::json& history);

struct ScreenOptions {
  // Interests the provider could not judge are enqueued here for humans.
  judge::JudgeBuffer* buffer = nullptr;
  int round = 0;
};

// Annotates every interest with a verdict; nothing is removed. If the
// provider throws, the profile comes back unjudged with kFlagUnscreened.
InterestProfile screen_interests(const InterestProfile& profile,
                                 judge::VerdictProvider& provider,
                                 const nlohmann::json& history,
                                 const ScreenOptions& opts = {});

nlohmann::json to_json(const InterestProfile& p);
InterestProfile profile_from_json(const nlohmann::json& j);

// profiles.jsonl, one line per user. Upsert rewrites the file atomically
// with the user's line replaced or appended, keeping user order.
std::vector<InterestProfile> load_profiles(const std::filesystem::path& path);
void upsert_profile(const std::filesystem::path& path, const InterestProfile& p);
std::optional<InterestProfile> find_profile(const std::filesystem::path& path,
                                            std::string_view user_id);

}  // namespace tagrec::mining

#endif  // TAGREC_MINING_INTEREST_MINING_HPP_
