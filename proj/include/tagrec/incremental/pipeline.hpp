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

// Periodic data pipeline turning recent feedback into balanced fine-tuning
// samples: purification, interest completion, two-stage balancing. Also
// the HR@k evaluator.

#ifndef TAGREC_INCREMENTAL_PIPELINE_HPP_
#define TAGREC_INCREMENTAL_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tagrec/common/time.hpp"
#include "tagrec/events/event_store.hpp"
#include "tagrec/llm/gateway.hpp"
#include "tagrec/mining/interest_mining.hpp"

namespace tagrec::incremental {

struct Judged {
  bool relevant = false;
  bool seasonal = false;
  bool operator==(const Judged&) const = default;
};

struct FeedbackRecord {
  std::string user_id;
  std::string item_id;
  std::string item_title;
  std::string category;
  std::string behavior;  // "click" | "purchase"
  Timestamp timestamp = 0;
  std::optional<Judged> judged;

  bool operator==(const FeedbackRecord&) const = default;
};

inline constexpr int kDefaultWindowDays = 14;

// Item events with now - window <= ts < now. Purchases become "purchase",
// every other item behavior "click".
std::vector<FeedbackRecord> select_feedback(const std::vector<events::UserEvent>& events,
                                            Timestamp now, int window_days = kDefaultWindowDays);

class RecordJudge {
 public:
  virtual ~RecordJudge() = default;
  // nullopt or an exception sends the record to review.
  virtual std::optional<Judged> judge(const FeedbackRecord& r) = 0;
};

// relevant: the record's category occurs at least `min_count` times in the
// user's history; seasonal: the title's season lexicon entry, if any, fits
// the current or upcoming season at `now`.
class RuleRecordJudge : public RecordJudge {
 public:
  RuleRecordJudge(const std::vector<FeedbackRecord>& history, Timestamp now,
                  std::size_t min_count = 2);
  std::optional<Judged> judge(const FeedbackRecord& r) override;

 private:
  std::map<std::pair<std::string, std::string>, std::size_t> counts_;
  Timestamp now_;
  std::size_t min_count_;
};

enum class DropReason { kIrrelevant, kOffSeason };
std::string_view to_string(DropReason r);

struct Dropped {
  FeedbackRecord record;
  DropReason reason = DropReason::kIrrelevant;
};

struct PurifyResult {
  std::vector<FeedbackRecord> kept;
  std::vector<Dropped> dropped;
  std::vector<FeedbackRecord> review;
};

// |kept| + |dropped| + |review| = |records|. Irrelevance is reported
// before seasonality.
PurifyResult purify(const std::vector<FeedbackRecord>& records, RecordJudge& judge);

struct TrainingSample {
  std::string user_id;
  std::string tag;  // the item title, verbatim
  std::string interest;
  std::string rationale;
  std::string category;
  Timestamp timestamp = 0;

  bool operator==(const TrainingSample&) const = default;
};

struct Completion {
  std::string interest;
  std::string rationale;
};

class InterestCompleter {
 public:
  virtual ~InterestCompleter() = default;
  virtual std::optional<Completion> complete(const FeedbackRecord& r,
                                             const mining::InterestProfile* profile) = 0;
};

// Interest from the category -> interest taxonomy.
class TaxonomyCompleter : public InterestCompleter {
 public:
  explicit TaxonomyCompleter(mining::CategoryInterests taxonomy);
  std::optional<Completion> complete(const FeedbackRecord& r,
                                     const mining::InterestProfile* profile) override;

 private:
  mining::CategoryInterests taxonomy_;
};

// Interest and rationale from the interest-completion prompt.
class LlmCompleter : public InterestCompleter {
 public:
  LlmCompleter(llm::LlmGateway& gateway, const std::map<std::string, mining::UserAttributes>* users,
               const std::map<std::string, std::vector<FeedbackRecord>>* history,
               std::optional<std::uint64_t> seed = 0);
  std::optional<Completion> complete(const FeedbackRecord& r,
                                     const mining::InterestProfile* profile) override;

 private:
  llm::LlmGateway& gateway_;
  const std::map<std::string, mining::UserAttributes>* users_;
  const std::map<std::string, std::vector<FeedbackRecord>>* history_;
  std::optional<std::uint64_t> seed_;
};

struct CompleteResult {
  std::vector<TrainingSample> samples;
  std::size_t skipped = 0;
};

using ProfileSource = std::function<const mining::InterestProfile*(std::string_view user_id)>;

// Completer failures (nullopt, empty fields or an exception) skip the
// record.
CompleteResult complete(const std::vector<FeedbackRecord>& records,
                        const ProfileSource& profiles, InterestCompleter& completer);

struct BalanceConfig {
  std::size_t per_user_cap = 80;  // distinct tags per user
  std::size_t per_cate_cap = 2;   // samples per (user, category)
  bool global_cate_cap = false;   // cap per category across users instead
  std::uint64_t seed = 0;
};

using CategoryOf = std::function<std::string(const std::string& tag)>;

// Stage 1 keeps the samples of a uniform seeded choice of per_user_cap
// distinct tags per user; stage 2 keeps a uniform seeded choice of
// per_cate_cap samples per group. Samples without a category get one from
// `category_of`. Output is sorted by (user, category, tag, timestamp).
std::vector<TrainingSample> balance(std::vector<TrainingSample> samples,
                                    const BalanceConfig& cfg, const CategoryOf& category_of = {});

struct EvalCase {
  std::string user_id;
  Timestamp cutoff = 0;
  std::string gt_category;
};

std::vector<EvalCase> load_eval(const std::filesystem::path& path);

struct HitReport {
  double hr = 0.0;
  std::size_t users = 0;
  std::size_t hits = 0;
  std::size_t missing_predictions = 0;
};

// (1/|U|) sum_u 1(gt_u in {category_of(T_u,1..k)}). Users without
// predictions count as misses. Throws ValidationError on an empty set.
HitReport hr_at_k(const std::vector<EvalCase>& eval,
                  const std::map<std::string, std::vector<std::string>>& predictions,
                  const CategoryOf& category_of, std::size_t k = 30);

nlohmann::json to_json(const TrainingSample& s);
TrainingSample sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeedbackRecord& r);

// One prompt/response pair per user: the tag-prediction prompt built from
// the user's attributes and sample interests, and the samples rendered as
// the expected tag list.
std::vector<nlohmann::json> export_sft(
    const std::vector<TrainingSample>& samples,
    const std::map<std::string, mining::UserAttributes>& users = {});

}  // namespace tagrec::incremental

#endif  // TAGREC_INCREMENTAL_PIPELINE_HPP_
