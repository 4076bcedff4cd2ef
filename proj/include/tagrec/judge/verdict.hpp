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

// Criterion schemas for the three judged tasks and the verdict type whose
// pass bit is derived from them.

#ifndef TAGREC_JUDGE_VERDICT_HPP_
#define TAGREC_JUDGE_VERDICT_HPP_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tagrec/llm/prompt_template.hpp"

namespace tagrec::judge {

using llm::Task;

enum class Scheme { kBinary, kMultiLevel, kCategorical };

std::string_view to_string(Scheme s);

struct CriterionSchema {
  Task task = Task::kInterestMining;
  std::string name;
  Scheme scheme = Scheme::kBinary;
  std::vector<std::string> labels;   // passing labels first
  std::vector<std::string> passing;  // subset of labels
  std::string help;

  bool allows(std::string_view label) const;
  bool passes(std::string_view label) const;
};

// Interest mining, tag prediction and explanation.
const std::vector<Task>& judged_tasks();

// Throws ValidationError for a task without schemas.
const std::vector<CriterionSchema>& schemas(Task task);

using Criteria = std::map<std::string, std::string, std::less<>>;

struct QualityVerdict {
  Criteria criteria;
  bool pass = false;

  bool operator==(const QualityVerdict&) const = default;
};

// True iff every schema criterion is present with a passing label.
bool derive_pass(const Criteria& criteria,
                 const std::vector<CriterionSchema>& schemas);

// Checks that `criteria` names exactly the task's criteria, each with an
// allowed label, and derives the pass bit. Throws ValidationError naming
// the offending field.
QualityVerdict make_verdict(Task task, Criteria criteria);

// The first criterion carrying a failing label, "name:label", or empty.
std::string first_failure(const QualityVerdict& v);

nlohmann::json to_json(const QualityVerdict& v);
// Reads {"criteria": {...}} (a bare criteria object is accepted too) and
// re-derives the pass bit; a stored "pass" field is ignored.
QualityVerdict verdict_from_json(Task task, const nlohmann::json& j);

nlohmann::json schemas_json();

// "- name: Label / Label / ..." per criterion, passing labels first.
std::string criteria_bullets(Task task);

}  // namespace tagrec::judge

#endif  // TAGREC_JUDGE_VERDICT_HPP_
