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

// Verdict providers: deterministic rules, an LLM judge behind the gateway
// and a fixture table.
//
// Payloads are JSON objects whose fields depend on the task:
//   interest_mining  {interest, reason, stage, history:[{title, category}]}
//   tag_prediction   {tag, interest, reason, profile_interests:[...],
//                     history:[{title, category}], specific, valid}
//   explanation      {interest, item_title, explanation}

#ifndef TAGREC_JUDGE_JUDGE_HPP_
#define TAGREC_JUDGE_JUDGE_HPP_

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagrec/judge/verdict.hpp"
#include "tagrec/llm/gateway.hpp"

namespace tagrec::judge {

class VerdictProvider {
 public:
  virtual ~VerdictProvider() = default;
  virtual std::string name() const = 0;
  // nullopt when the provider produced nothing usable for this payload;
  // such samples go to the human queue. Throws Error when the provider
  // itself is unavailable.
  virtual std::optional<QualityVerdict> judge(Task task,
                                              const nlohmann::json& payload) = 0;
};

struct RuleJudgeConfig {
  // Category id -> interest label, used to find behavioral support.
  std::map<std::string, std::string> interest_by_category;
  std::vector<std::string> necessity_terms = {
      "necessity", "necessities", "daily",   "consumable", "consumables",
      "toilet",    "detergent",   "diapers", "groceries"};
  // Apparel evidence only loosely supports an activity interest.
  std::vector<std::string> weak_terms = {"pants", "leggings", "shirt",
                                         "clothing", "apparel", "dress"};
  std::vector<std::string> exaggeration_terms = {"100%", "guaranteed",
                                                 "best ever", "最", "第一"};
  std::vector<std::string> sensitive_terms = {
      "time-limited", "limited-time", "hurry", "限时", "抢购",
      "女士",         "先生",         "小姐"};
};

// Deterministic stand-in for a human or LLM judge.
class RuleJudge : public VerdictProvider {
 public:
  explicit RuleJudge(RuleJudgeConfig cfg = {});

  std::string name() const override { return "rule"; }
  std::optional<QualityVerdict> judge(Task task,
                                      const nlohmann::json& payload) override;

  // True when some history entry's category maps to `interest` or a
  // history title shares a word with it.
  bool supported(const std::string& interest, const nlohmann::json& history) const;

 private:
  QualityVerdict interest(const nlohmann::json& p) const;
  QualityVerdict tag(const nlohmann::json& p) const;
  QualityVerdict explanation(const nlohmann::json& p) const;

  RuleJudgeConfig cfg_;
};

// Prompts the judge template once per sample and parses a JSON object of
// criterion -> label. Unparseable or off-schema output yields nullopt.
class LlmJudge : public VerdictProvider {
 public:
  explicit LlmJudge(llm::LlmGateway& gateway,
                    const llm::PromptTemplate* tmpl = nullptr,
                    std::optional<std::uint64_t> seed = 0);

  std::string name() const override;
  std::optional<QualityVerdict> judge(Task task,
                                      const nlohmann::json& payload) override;

  std::size_t unparsed() const { return unparsed_; }

 private:
  llm::LlmGateway& gateway_;
  const llm::PromptTemplate* tmpl_;
  std::optional<std::uint64_t> seed_;
  std::size_t unparsed_ = 0;
};

// Verdicts keyed by payload content. Unknown payloads yield nullopt.
class FixtureJudge : public VerdictProvider {
 public:
  std::string name() const override { return "fixture"; }
  std::optional<QualityVerdict> judge(Task task,
                                      const nlohmann::json& payload) override;

  void set(Task task, const nlohmann::json& payload, QualityVerdict verdict);
  static std::string key(Task task, const nlohmann::json& payload);

 private:
  std::mutex mu_;
  std::map<std::string, QualityVerdict> table_;
};

// One-line description of what is being judged, for the judge prompt.
std::string task_description(Task task);

// Bindings of the judge template for one sample.
llm::Bindings judge_bindings(Task task, const nlohmann::json& payload);

// One verdict with the pass bit re-derived from the schemas.
std::optional<QualityVerdict> judge_payload(Task task,
                                            const nlohmann::json& payload,
                                            VerdictProvider& provider);

}  // namespace tagrec::judge

#endif  // TAGREC_JUDGE_JUDGE_HPP_
