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

#include "tagrec/incremental/pipeline.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/random.hpp"
#include "tagrec/common/season.hpp"
#include "tagrec/common/text.hpp"
#include "tagrec/llm/structured.hpp"

namespace tagrec::incremental {

using nlohmann::json;

std::vector<FeedbackRecord> select_feedback(const std::vector<events::UserEvent>& events,
                                            Timestamp now, int window_days) {
  if (window_days <= 0) throw ConfigError("window_days must be positive");
  const Timestamp from = now - static_cast<Timestamp>(window_days) * kSecondsPerDay;
  std::vector<FeedbackRecord> out;
  for (const auto& e : events) {
    if (!e.item_id || e.timestamp < from || e.timestamp >= now) continue;
    FeedbackRecord r;
    r.user_id = e.user_id;
    r.item_id = *e.item_id;
    r.item_title = e.item_title;
    r.category = e.category_id;
    r.behavior = e.behavior == events::BehaviorKind::kPurchase ? "purchase" : "click";
    r.timestamp = e.timestamp;
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.user_id, a.timestamp) < std::tie(b.user_id, b.timestamp);
  });
  return out;
}

RuleRecordJudge::RuleRecordJudge(const std::vector<FeedbackRecord>& history, Timestamp now,
                                 std::size_t min_count)
    : now_(now), min_count_(min_count) {
  for (const auto& r : history) ++counts_[{r.user_id, r.category}];
}

std::optional<Judged> RuleRecordJudge::judge(const FeedbackRecord& r) {
  if (r.user_id.empty() || r.item_title.empty()) return std::nullopt;
  auto it = counts_.find({r.user_id, r.category});
  Judged j;
  j.relevant = !r.category.empty() && it != counts_.end() && it->second >= min_count_;
  j.seasonal = in_season(r.item_title, now_);
  return j;
}

std::string_view to_string(DropReason r) {
  return r == DropReason::kIrrelevant ? "irrelevant" : "off_season";
}

PurifyResult purify(const std::vector<FeedbackRecord>& records, RecordJudge& judge) {
  PurifyResult out;
  for (const auto& r : records) {
    std::optional<Judged> j;
    try {
      j = judge.judge(r);
    } catch (const std::exception&) {
      j.reset();
    }
    if (!j) {
      out.review.push_back(r);
      continue;
    }
    FeedbackRecord judged = r;
    judged.judged = j;
    if (!j->relevant) {
      out.dropped.push_back({std::move(judged), DropReason::kIrrelevant});
    } else if (!j->seasonal) {
      out.dropped.push_back({std::move(judged), DropReason::kOffSeason});
    } else {
      out.kept.push_back(std::move(judged));
    }
  }
  return out;
}

TaxonomyCompleter::TaxonomyCompleter(mining::CategoryInterests taxonomy)
    : taxonomy_(std::move(taxonomy)) {}

std::optional<Completion> TaxonomyCompleter::complete(const FeedbackRecord& r,
                                                      const mining::InterestProfile*) {
  auto it = taxonomy_.find(r.category);
  if (it == taxonomy_.end()) return std::nullopt;
  return Completion{it->second,
                    fmt::format("The {} of {} continues the {} interest", r.behavior,
                                r.item_title, it->second)};
}

LlmCompleter::LlmCompleter(llm::LlmGateway& gateway,
                           const std::map<std::string, mining::UserAttributes>* users,
                           const std::map<std::string, std::vector<FeedbackRecord>>* history,
                           std::optional<std::uint64_t> seed)
    : gateway_(gateway), users_(users), history_(history), seed_(seed) {}

std::optional<Completion> LlmCompleter::complete(const FeedbackRecord& r,
                                                 const mining::InterestProfile* profile) {
  std::string attrs = "unknown";
  if (users_) {
    auto it = users_->find(r.user_id);
    if (it != users_->end()) attrs = mining::render_attributes(it->second);
  }
  std::vector<std::string> interests;
  if (profile) interests = profile->labels();
  std::vector<std::string> titles;
  if (history_) {
    auto it = history_->find(r.user_id);
    if (it != history_->end()) {
      for (const auto& h : it->second) {
        if (h.timestamp < r.timestamp) titles.push_back(h.item_title);
      }
    }
  }
  llm::LlmRequest req;
  req.tmpl = &llm::default_template(llm::Task::kInterestCompletion);
  req.bindings = {{"user_attributes", attrs},
                  {"user_interests", interests.empty() ? "none" : text::join(interests, "; ")},
                  {"history", titles.empty() ? "none" : text::join(titles, "; ")},
                  {"item_information", fmt::format("{} (category {}, {})", r.item_title,
                                                   r.category, r.behavior)}};
  req.seed = seed_;
  const llm::Completion c = gateway_.complete(req);
  llm::ParseMode mode = llm::ParseMode::kStrict;
  const json j = llm::parse_json_block(llm::strip_thinking(c.text), '{', '}', mode);
  if (!j.is_object() || !j.contains("Interest") || !j.at("Interest").is_string()) {
    return std::nullopt;
  }
  Completion out;
  out.interest = std::string(text::trim(j.at("Interest").get<std::string>()));
  if (j.contains("Reason") && j.at("Reason").is_string()) {
    out.rationale = j.at("Reason").get<std::string>();
  }
  return out;
}

CompleteResult complete(const std::vector<FeedbackRecord>& records,
                        const ProfileSource& profiles, InterestCompleter& completer) {
  CompleteResult out;
  for (const auto& r : records) {
    const mining::InterestProfile* p = profiles ? profiles(r.user_id) : nullptr;
    std::optional<Completion> c;
    try {
      c = completer.complete(r, p);
    } catch (const std::exception&) {
      c.reset();
    }
    if (!c || c->interest.empty() || r.item_title.empty()) {
      ++out.skipped;
      continue;
    }
    out.samples.push_back(
        {r.user_id, r.item_title, c->interest, c->rationale, r.category, r.timestamp});
  }
  return out;
}

namespace {

bool sample_less(const TrainingSample& a, const TrainingSample& b) {
  return std::tie(a.user_id, a.category, a.tag, a.timestamp, a.interest, a.rationale) <
         std::tie(b.user_id, b.category, b.tag, b.timestamp, b.interest, b.rationale);
}

// Uniform seeded subset of size min(cap, n) of the given group.
std::vector<TrainingSample> pick(std::vector<TrainingSample> group, std::size_t cap,
                                 std::uint64_t seed) {
  std::sort(group.begin(), group.end(), sample_less);
  if (group.size() <= cap) return group;
  Rng rng(seed);
  std::vector<TrainingSample> out;
  for (std::size_t i : rng.sample_without_replacement(group.size(), cap)) {
    out.push_back(group[i]);
  }
  return out;
}

}  // namespace

std::vector<TrainingSample> balance(std::vector<TrainingSample> samples,
                                    const BalanceConfig& cfg, const CategoryOf& category_of) {
  for (auto& s : samples) {
    if (s.category.empty() && category_of) s.category = category_of(s.tag);
  }
  // Stage 1: distinct tags per user.
  std::map<std::string, std::map<std::string, std::vector<TrainingSample>>> by_user;
  for (auto& s : samples) by_user[s.user_id][s.tag].push_back(std::move(s));
  std::vector<TrainingSample> stage1;
  for (auto& [user, tags] : by_user) {
    std::vector<std::string> names;
    for (const auto& [tag, _] : tags) names.push_back(tag);
    std::vector<std::size_t> chosen;
    if (names.size() <= cfg.per_user_cap) {
      for (std::size_t i = 0; i < names.size(); ++i) chosen.push_back(i);
    } else {
      Rng rng(mix_seed(cfg.seed, "user:" + user));
      chosen = rng.sample_without_replacement(names.size(), cfg.per_user_cap);
    }
    for (std::size_t i : chosen) {
      for (auto& s : tags[names[i]]) stage1.push_back(std::move(s));
    }
  }
  // Stage 2: per (user, category), or per category across users.
  std::map<std::string, std::vector<TrainingSample>> groups;
  for (auto& s : stage1) {
    const std::string key =
        cfg.global_cate_cap ? s.category : s.user_id + std::string(1, '\0') + s.category;
    groups[key].push_back(std::move(s));
  }
  std::vector<TrainingSample> out;
  for (auto& [key, group] : groups) {
    for (auto& s : pick(std::move(group), cfg.per_cate_cap, mix_seed(cfg.seed, "cate:" + key))) {
      out.push_back(std::move(s));
    }
  }
  std::sort(out.begin(), out.end(), sample_less);
  return out;
}

std::vector<EvalCase> load_eval(const std::filesystem::path& path) {
  std::vector<EvalCase> out;
  for (const auto& line : io::read_lines(path)) {
    if (text::trim(line).empty()) continue;
    const json j = json::parse(line);
    out.push_back({j.at("user_id").get<std::string>(), j.value("cutoff", Timestamp{0}),
                   j.at("gt_category").get<std::string>()});
  }
  return out;
}

HitReport hr_at_k(const std::vector<EvalCase>& eval,
                  const std::map<std::string, std::vector<std::string>>& predictions,
                  const CategoryOf& category_of, std::size_t k) {
  if (eval.empty()) throw ValidationError("evaluation set is empty");
  if (k == 0) throw ConfigError("k must be positive");
  if (!category_of) throw ConfigError("category mapping is required");
  HitReport r;
  r.users = eval.size();
  for (const auto& c : eval) {
    auto it = predictions.find(c.user_id);
    if (it == predictions.end()) {
      ++r.missing_predictions;
      continue;
    }
    const auto& tags = it->second;
    const std::size_t n = std::min(k, tags.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (category_of(tags[i]) == c.gt_category) {
        ++r.hits;
        break;
      }
    }
  }
  r.hr = static_cast<double>(r.hits) / static_cast<double>(r.users);
  return r;
}

json to_json(const TrainingSample& s) {
  return {{"user_id", s.user_id},   {"tag", s.tag},           {"interest", s.interest},
          {"rationale", s.rationale}, {"category", s.category}, {"timestamp", s.timestamp}};
}

TrainingSample sample_from_json(const json& j) {
  TrainingSample s;
  s.user_id = j.at("user_id").get<std::string>();
  s.tag = j.at("tag").get<std::string>();
  s.interest = j.at("interest").get<std::string>();
  s.rationale = j.value("rationale", std::string());
  s.category = j.value("category", std::string());
  s.timestamp = j.value("timestamp", Timestamp{0});
  if (s.user_id.empty() || s.tag.empty() || s.interest.empty()) {
    throw ValidationError("training sample needs user_id, tag and interest");
  }
  return s;
}

json to_json(const FeedbackRecord& r) {
  json j = {{"user_id", r.user_id},   {"item_id", r.item_id},   {"item_title", r.item_title},
            {"category", r.category}, {"behavior", r.behavior}, {"timestamp", r.timestamp}};
  if (r.judged) j["judged"] = {{"relevant", r.judged->relevant}, {"seasonal", r.judged->seasonal}};
  return j;
}

std::vector<json> export_sft(const std::vector<TrainingSample>& samples,
                             const std::map<std::string, mining::UserAttributes>& users) {
  std::map<std::string, std::vector<const TrainingSample*>> by_user;
  for (const auto& s : samples) by_user[s.user_id].push_back(&s);
  const auto& tmpl = llm::default_template(llm::Task::kTagPrediction);
  std::vector<json> out;
  for (const auto& [user, list] : by_user) {
    std::vector<std::string> interests;
    std::set<std::string> seen;
    std::vector<llm::ParsedTag> tags;
    for (const auto* s : list) {
      if (seen.insert(s->interest).second) interests.push_back(s->interest);
      tags.push_back({s->tag, s->interest, s->rationale});
    }
    auto it = users.find(user);
    const std::string attrs =
        it == users.end() ? std::string("unknown") : mining::render_attributes(it->second);
    const llm::Bindings b = {{"user_attributes", attrs},
                             {"user_interests", text::join(interests, "; ")},
                             {"click_sequence", "none"},
                             {"purchase_sequence", "none"},
                             {"search_sequence", "none"},
                             {"extra_information", "none"},
                             {"tag_count", std::to_string(tags.size())}};
    out.push_back({{"user_id", user},
                   {"prompt", tmpl.instantiate(b)},
                   {"response", llm::render_tags(tags)}});
  }
  return out;
}

}  // namespace tagrec::incremental
