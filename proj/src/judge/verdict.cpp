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

#include "tagrec/judge/verdict.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"

namespace tagrec::judge {

namespace {

CriterionSchema binary(Task task, std::string name, std::string help) {
  return {task, std::move(name), Scheme::kBinary, {"Yes", "No"}, {"Yes"},
          std::move(help)};
}

CriterionSchema multi(Task task, std::string name, std::string help) {
  return {task,
          std::move(name),
          Scheme::kMultiLevel,
          {"Excellent", "Good", "Bad"},
          {"Excellent", "Good"},
          std::move(help)};
}

const std::vector<CriterionSchema>& interest_schemas() {
  static const std::vector<CriterionSchema> kSchemas = {
      {Task::kInterestMining,
       "willingness",
       Scheme::kCategorical,
       {"spontaneity", "necessity"},
       {"spontaneity"},
       "spontaneity: a voluntary preference such as tennis; necessity: "
       "obligation-driven buying such as toilet paper"},
      {Task::kInterestMining,
       "reasonableness",
       Scheme::kCategorical,
       {"strong", "weak", "none", "hallucination"},
       {"strong"},
       "strong: the reason supports the interest (bought a tennis racket); "
       "weak: loosely related (yoga pants for yoga); none: reason and "
       "interest unrelated; hallucination: no behavioral evidence at all"},
  };
  return kSchemas;
}

const std::vector<CriterionSchema>& tag_schemas() {
  static const std::vector<CriterionSchema> kSchemas = {
      binary(Task::kTagPrediction, "relevance",
             "the tag serves the interest it names"),
      binary(Task::kTagPrediction, "consistency",
             "the tag is grounded in the user's attributes and history"),
      binary(Task::kTagPrediction, "specificity",
             "precise enough to retrieve items; 'outdoor sports equipment' "
             "is too broad"),
      binary(Task::kTagPrediction, "validity",
             "describes a product that actually exists"),
  };
  return kSchemas;
}

const std::vector<CriterionSchema>& explanation_schemas() {
  static const std::vector<CriterionSchema> kSchemas = {
      multi(Task::kExplanation, "relevance",
            "the explanation ties the item to the user's interest"),
      multi(Task::kExplanation, "factuality",
            "claims match the item's actual features"),
      multi(Task::kExplanation, "clarity",
            "fluent, 6-10 characters excluding punctuation and spaces"),
      multi(Task::kExplanation, "safety",
            "no personal information and no hard sell"),
  };
  return kSchemas;
}

}  // namespace

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::kBinary: return "binary";
    case Scheme::kMultiLevel: return "multi_level";
    case Scheme::kCategorical: return "categorical";
  }
  return "binary";
}

bool CriterionSchema::allows(std::string_view label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

bool CriterionSchema::passes(std::string_view label) const {
  return std::find(passing.begin(), passing.end(), label) != passing.end();
}

const std::vector<Task>& judged_tasks() {
  static const std::vector<Task> kTasks = {
      Task::kInterestMining, Task::kTagPrediction, Task::kExplanation};
  return kTasks;
}

const std::vector<CriterionSchema>& schemas(Task task) {
  switch (task) {
    case Task::kInterestMining: return interest_schemas();
    case Task::kTagPrediction: return tag_schemas();
    case Task::kExplanation: return explanation_schemas();
    default: break;
  }
  throw ValidationError(
      fmt::format("task '{}' has no judge criteria", llm::to_string(task)));
}

bool derive_pass(const Criteria& criteria,
                 const std::vector<CriterionSchema>& schemas) {
  for (const auto& s : schemas) {
    auto it = criteria.find(s.name);
    if (it == criteria.end() || !s.passes(it->second)) return false;
  }
  return true;
}

QualityVerdict make_verdict(Task task, Criteria criteria) {
  const auto& sch = schemas(task);
  for (const auto& [name, label] : criteria) {
    auto it = std::find_if(sch.begin(), sch.end(),
                           [&](const CriterionSchema& s) { return s.name == name; });
    if (it == sch.end()) {
      throw ValidationError(fmt::format("criteria.{}: unknown criterion", name));
    }
    if (!it->allows(label)) {
      throw ValidationError(fmt::format("criteria.{}: label '{}' not in {{{}}}",
                                        name, label, fmt::join(it->labels, ", ")));
    }
  }
  for (const auto& s : sch) {
    if (!criteria.count(s.name)) {
      throw ValidationError(fmt::format("criteria.{}: missing", s.name));
    }
  }
  QualityVerdict v;
  v.pass = derive_pass(criteria, sch);
  v.criteria = std::move(criteria);
  return v;
}

std::string first_failure(const QualityVerdict& v) {
  for (Task t : judged_tasks()) {
    const auto& sch = schemas(t);
    if (sch.size() != v.criteria.size()) continue;
    bool same = true;
    for (const auto& s : sch) same = same && v.criteria.count(s.name);
    if (!same) continue;
    for (const auto& s : sch) {
      const auto& label = v.criteria.find(s.name)->second;
      if (!s.passes(label)) return s.name + ":" + label;
    }
    return {};
  }
  return {};
}

nlohmann::json to_json(const QualityVerdict& v) {
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [k, label] : v.criteria) c[k] = label;
  return {{"criteria", c}, {"pass", v.pass}};
}

QualityVerdict verdict_from_json(Task task, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("criteria: expected an object");
  const nlohmann::json& c = j.contains("criteria") ? j.at("criteria") : j;
  if (!c.is_object()) throw ValidationError("criteria: expected an object");
  Criteria criteria;
  for (const auto& [k, v] : c.items()) {
    if (!v.is_string()) {
      throw ValidationError(fmt::format("criteria.{}: expected a string label", k));
    }
    criteria[k] = v.get<std::string>();
  }
  return make_verdict(task, std::move(criteria));
}

nlohmann::json schemas_json() {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (Task t : judged_tasks()) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : schemas(t)) {
      arr.push_back({{"name", s.name},
                     {"scheme", to_string(s.scheme)},
                     {"labels", s.labels},
                     {"passing", s.passing},
                     {"help", s.help}});
    }
    out[std::string(llm::to_string(t))] = arr;
  }
  return nlohmann::json::parse(out.dump());
}

std::string criteria_bullets(Task task) {
  std::string out;
  for (const auto& s : schemas(task)) {
    if (!out.empty()) out += '\n';
    out += fmt::format("- {}: {}", s.name, fmt::join(s.labels, " / "));
  }
  return out;
}

}  // namespace tagrec::judge
