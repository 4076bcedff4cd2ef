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

#include "tagrec/judge/judge.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/random.hpp"
#include "tagrec/common/text.hpp"
#include "tagrec/llm/structured.hpp"

namespace tagrec::judge {

using nlohmann::json;

namespace {

const std::set<std::string> kStopWords = {"and", "the", "for", "with", "of",
                                          "a", "an", "to", "in", "on"};

std::string str(const json& p, const char* key) {
  auto it = p.find(key);
  return it != p.end() && it->is_string() ? it->get<std::string>() : std::string();
}

bool flag(const json& p, const char* key, bool fallback) {
  auto it = p.find(key);
  return it != p.end() && it->is_boolean() ? it->get<bool>() : fallback;
}

std::set<std::string> content_words(std::string_view s) {
  std::set<std::string> out;
  for (auto& w : text::tokenize_words(s)) {
    if (!kStopWords.count(w)) out.insert(std::move(w));
  }
  return out;
}

bool shares_word(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& w : a) {
    if (b.count(w)) return true;
  }
  return false;
}

bool has_term(std::string_view text_cf, const std::vector<std::string>& terms) {
  const auto words = content_words(text_cf);
  for (const auto& t : terms) {
    const std::string tf = text::casefold(t);
    // Multi-word, symbolic and CJK terms match as substrings; plain words
    // must match a whole token.
    const bool plain = std::all_of(tf.begin(), tf.end(), [](char c) {
      return c >= 'a' && c <= 'z';
    });
    if (plain ? words.count(tf) > 0 : text::contains(text_cf, tf)) return true;
  }
  return false;
}

}  // namespace

std::string task_description(Task task) {
  switch (task) {
    case Task::kInterestMining:
      return "Judge one mined user interest and its reason against the "
             "user's behavior history.";
    case Task::kTagPrediction:
      return "Judge one predicted item tag with the interest it serves and "
             "its reason.";
    case Task::kExplanation:
      return "Judge one recommendation explanation written for an item and "
             "a user interest.";
    default: break;
  }
  return {};
}

RuleJudge::RuleJudge(RuleJudgeConfig cfg) : cfg_(std::move(cfg)) {}

bool RuleJudge::supported(const std::string& interest, const json& history) const {
  if (!history.is_array()) return false;
  const std::string want = text::casefold(interest);
  const auto words = content_words(interest);
  for (const auto& h : history) {
    if (!h.is_object()) continue;
    auto it = cfg_.interest_by_category.find(str(h, "category"));
    if (it != cfg_.interest_by_category.end() && text::casefold(it->second) == want) {
      return true;
    }
    if (shares_word(words, content_words(str(h, "title")))) return true;
  }
  return false;
}

QualityVerdict RuleJudge::interest(const json& p) const {
  const std::string label = str(p, "interest");
  const std::string reason = str(p, "reason");
  const std::string label_cf = text::casefold(label);
  const std::string reason_cf = text::casefold(reason);
  Criteria c;
  c["willingness"] = has_term(label_cf, cfg_.necessity_terms) ||
                             has_term(reason_cf, cfg_.necessity_terms)
                         ? "necessity"
                         : "spontaneity";
  const json history = p.contains("history") ? p.at("history") : json::array();
  if (!supported(label, history)) {
    c["reasonableness"] = "hallucination";
  } else if (has_term(reason_cf, cfg_.weak_terms)) {
    c["reasonableness"] = "weak";
  } else if (!shares_word(content_words(label), content_words(reason))) {
    c["reasonableness"] = "none";
  } else {
    c["reasonableness"] = "strong";
  }
  return make_verdict(Task::kInterestMining, std::move(c));
}

QualityVerdict RuleJudge::tag(const json& p) const {
  const std::string interest = str(p, "interest");
  bool in_profile = false;
  if (auto it = p.find("profile_interests"); it != p.end() && it->is_array()) {
    for (const auto& label : *it) {
      if (label.is_string() &&
          text::casefold(label.get<std::string>()) == text::casefold(interest)) {
        in_profile = true;
      }
    }
  }
  const json history = p.contains("history") ? p.at("history") : json::array();
  Criteria c;
  c["relevance"] = in_profile ? "Yes" : "No";
  c["consistency"] =
      supported(interest, history) && !str(p, "reason").empty() ? "Yes" : "No";
  c["specificity"] = flag(p, "specific", true) ? "Yes" : "No";
  c["validity"] = flag(p, "valid", true) ? "Yes" : "No";
  return make_verdict(Task::kTagPrediction, std::move(c));
}

QualityVerdict RuleJudge::explanation(const json& p) const {
  const std::string expl = str(p, "explanation");
  const std::string expl_cf = text::casefold(expl);
  const std::string title_cf = text::casefold(str(p, "item_title"));
  const std::size_t len = text::count_graphemes(expl);
  Criteria c;
  c["relevance"] = expl.empty() ? "Bad"
                   : shares_word(content_words(str(p, "interest")),
                                 content_words(expl))
                       ? "Excellent"
                       : "Good";
  c["factuality"] = has_term(expl_cf, cfg_.exaggeration_terms) ? "Bad" : "Good";
  const bool near_copy = !expl_cf.empty() && !title_cf.empty() &&
                         text::contains(title_cf, expl_cf);
  c["clarity"] = len < 6 || len > 10 || near_copy ? "Bad" : "Excellent";
  // Honorific prefixes glued to a name ("MsZhang") read as personal data.
  bool personal = has_term(expl_cf, cfg_.sensitive_terms);
  for (const auto& w : text::tokenize_words(expl)) {
    for (const char* prefix : {"ms", "mr", "mrs"}) {
      const std::string_view pf(prefix);
      if (w.size() > pf.size() + 1 && w.compare(0, pf.size(), pf) == 0 &&
          std::isalpha(static_cast<unsigned char>(w[pf.size()]))) {
        personal = true;
      }
      if (w == pf) personal = true;
    }
  }
  c["safety"] = personal ? "Bad" : "Excellent";
  return make_verdict(Task::kExplanation, std::move(c));
}

std::optional<QualityVerdict> RuleJudge::judge(Task task, const json& payload) {
  if (!payload.is_object()) return std::nullopt;
  switch (task) {
    case Task::kInterestMining: return interest(payload);
    case Task::kTagPrediction: return tag(payload);
    case Task::kExplanation: return explanation(payload);
    default: break;
  }
  return std::nullopt;
}

LlmJudge::LlmJudge(llm::LlmGateway& gateway, const llm::PromptTemplate* tmpl,
                   std::optional<std::uint64_t> seed)
    : gateway_(gateway),
      tmpl_(tmpl ? tmpl : &llm::default_template(Task::kJudge)),
      seed_(seed) {}

std::string LlmJudge::name() const { return "llm:" + gateway_.provider().name(); }

std::optional<QualityVerdict> LlmJudge::judge(Task task, const json& payload) {
  llm::LlmRequest req;
  req.tmpl = tmpl_;
  req.bindings = judge_bindings(task, payload);
  req.seed = seed_;
  req.max_output_tokens = 512;
  const llm::Completion out = gateway_.complete(req);
  try {
    llm::ParseMode mode;
    const json j = llm::parse_json_block(out.text, '{', '}', mode);
    return verdict_from_json(task, j);
  } catch (const ParseError&) {
  } catch (const ValidationError&) {
  }
  ++unparsed_;
  return std::nullopt;
}

llm::Bindings judge_bindings(Task task, const json& payload) {
  return {{"task", task_description(task)},
          {"sample", payload.dump(2)},
          {"criteria", criteria_bullets(task)}};
}

std::string FixtureJudge::key(Task task, const json& payload) {
  return hex64(fnv1a64(payload.dump(), fnv1a64(llm::to_string(task))));
}

void FixtureJudge::set(Task task, const json& payload, QualityVerdict verdict) {
  std::lock_guard lock(mu_);
  table_[key(task, payload)] = std::move(verdict);
}

std::optional<QualityVerdict> FixtureJudge::judge(Task task, const json& payload) {
  std::lock_guard lock(mu_);
  auto it = table_.find(key(task, payload));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::optional<QualityVerdict> judge_payload(Task task, const json& payload,
                                            VerdictProvider& provider) {
  std::optional<QualityVerdict> v = provider.judge(task, payload);
  if (!v) return std::nullopt;
  return make_verdict(task, v->criteria);
}

}  // namespace tagrec::judge
