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

// Item-tag prediction from a profile and behavior sequences, and the
// constraint checks applied to a predicted set.

#ifndef TAGREC_TAGGING_TAG_PREDICTION_HPP_
#define TAGREC_TAGGING_TAG_PREDICTION_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tagrec/common/time.hpp"
#include "tagrec/events/event_store.hpp"
#include "tagrec/judge/judge.hpp"
#include "tagrec/llm/gateway.hpp"
#include "tagrec/mining/interest_mining.hpp"
#include "tagrec/retrieval/dataset.hpp"
#include "tagrec/retrieval/model.hpp"
#include "tagrec/retrieval/retrieval.hpp"

namespace tagrec::tagging {

struct TagTriplet {
  std::string tag;
  std::string interest;
  std::string reason;
  std::optional<judge::QualityVerdict> verdict;

  bool operator==(const TagTriplet&) const = default;
};

inline constexpr const char* kFlagRepaired = "repaired";

struct TagPredictionSet {
  std::string user_id;
  std::vector<TagTriplet> triplets;  // tags unique, case-folded
  Timestamp generated_at = 0;
  std::vector<std::string> flags;

  std::vector<std::string> tags() const;
  bool operator==(const TagPredictionSet&) const = default;
};

struct PredictOptions {
  std::size_t tag_count = 50;  // requested from the model
  std::size_t max_sequence = 50;  // most recent events per sequence
  bool allow_empty_profile = false;
  std::optional<std::uint64_t> seed = 0;
  double temperature = 0.0;
  const llm::PromptTemplate* tmpl = nullptr;
  Timestamp now = 0;
};

// "; "-joined titles (queries for searches), oldest first.
struct Sequences {
  std::string click;
  std::string purchase;
  std::string search;
};
Sequences render_sequences(const events::BehaviorLog& log, std::size_t max_per_sequence);

// Throws ValidationError for an empty profile unless allowed, ParseError
// (with the raw output) when nothing parses.
TagPredictionSet predict_tags(llm::LlmGateway& gateway, const mining::UserAttributes& attrs,
                              const mining::InterestProfile& profile,
                              const events::BehaviorLog& log, std::string_view extra,
                              const PredictOptions& opts = {});

struct FormatSplit {
  bool ok = false;
  std::string modifier;
  std::string core;
};

// The core word is the final token group: the last two whitespace tokens
// (one when the tag has two), or the last two characters of a single CJK
// token. The rest must be non-empty.
FormatSplit check_format(std::string_view tag);

inline constexpr Timestamp kFreshnessHorizon = 30 * kSecondsPerDay;

// False iff the core word occurs (case-folded substring) in the title or
// query of a reliable event with now - horizon < ts < now.
bool check_freshness(std::string_view tag, const events::BehaviorLog& log, Timestamp now,
                     Timestamp horizon = kFreshnessHorizon);

const std::vector<std::string>& default_broad_terms();

// >= 3 word tokens and no core token in the broad-term list.
bool check_specificity(std::string_view tag, const std::vector<std::string>& broad_terms);

// Whether a tag names a product the catalog can serve.
class ValidityOracle {
 public:
  virtual ~ValidityOracle() = default;
  virtual bool valid(std::string_view tag) const = 0;
};

// Some tag token is in the model's vocabulary and validity_probe passes.
class ProbeValidity : public ValidityOracle {
 public:
  ProbeValidity(const retrieval::TriTowerModel& model, const retrieval::CatalogIndex& index,
                double threshold);
  bool valid(std::string_view tag) const override;
  double threshold() const { return threshold_; }

 private:
  const retrieval::TriTowerModel& model_;
  const retrieval::CatalogIndex& index_;
  double threshold_;
};

// The q-quantile of max_v h_t . h_v over the catalog's own tags.
double calibrate_validity(const retrieval::TriTowerModel& model,
                          const retrieval::CatalogIndex& index,
                          const std::vector<std::string>& tags, double q = 0.05);

// Some core token appears in a catalog title. Used without a model.
class KeywordValidity : public ValidityOracle {
 public:
  explicit KeywordValidity(const retrieval::Catalog& catalog);
  bool valid(std::string_view tag) const override;

 private:
  std::set<std::string, std::less<>> words_;
};

struct TripletFlags {
  bool format_ok = false;
  bool interest_consistent = false;
  bool not_recently_interacted = false;
  bool specific = false;  // heuristic proxy
  bool valid = false;
  bool in_season = false;

  bool all() const;
  bool operator==(const TripletFlags&) const = default;
};

struct TagConstraintReport {
  std::vector<TripletFlags> triplets;
  bool count_ok = false;   // |triplets| >= min_tags
  bool season_ok = false;  // every triplet in season
  std::size_t min_tags = 50;

  bool operator==(const TagConstraintReport&) const = default;
};

struct ValidationConfig {
  std::size_t min_tags = 50;
  Timestamp horizon = kFreshnessHorizon;
  std::vector<std::string> broad_terms = default_broad_terms();
};

// Pure: equal inputs give equal reports.
TagConstraintReport validate_set(const TagPredictionSet& set,
                                 const mining::InterestProfile& profile,
                                 const events::BehaviorLog& log, Timestamp now,
                                 const ValidityOracle& validity,
                                 const ValidationConfig& cfg = {});

nlohmann::json to_json(const TripletFlags& f);
nlohmann::json to_json(const TagConstraintReport& r);

// Judge payload: {tag, interest, reason, profile_interests, history,
// specific, valid}.
nlohmann::json tag_payload(const TagTriplet& t, const mining::InterestProfile& profile,
                           const nlohmann::json& history, const TripletFlags& flags);

// Fills verdicts. Provider errors leave every verdict empty; unjudged
// triplets are enqueued when a buffer is given.
TagPredictionSet screen_tags(const TagPredictionSet& set, const TagConstraintReport& report,
                             const mining::InterestProfile& profile,
                             const nlohmann::json& history, judge::VerdictProvider& provider,
                             const mining::ScreenOptions& opts = {});

nlohmann::json to_json(const TagPredictionSet& s);
TagPredictionSet tag_set_from_json(const nlohmann::json& j);
std::vector<TagPredictionSet> load_tag_sets(const std::filesystem::path& path);
void upsert_tag_set(const std::filesystem::path& path, const TagPredictionSet& s);

}  // namespace tagrec::tagging

#endif  // TAGREC_TAGGING_TAG_PREDICTION_HPP_
