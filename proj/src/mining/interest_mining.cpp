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

#include "tagrec/mining/interest_mining.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/text.hpp"
#include "tagrec/llm/structured.hpp"
#include "tagrec/llm/stub_provider.hpp"

namespace tagrec::mining {

using nlohmann::json;

void validate(const UserAttributes& a) {
  if (a.user_id.empty()) throw ValidationError("user_id: required");
  if (a.age && (*a.age < 0 || *a.age > 130)) {
    throw ValidationError(fmt::format("age: {} outside [0, 130]", *a.age));
  }
}

std::string render_attributes(const UserAttributes& a) {
  std::vector<std::string> parts;
  if (a.age) parts.push_back(fmt::format("age: {}", *a.age));
  if (a.gender) parts.push_back("gender: " + *a.gender);
  if (a.location) parts.push_back("location: " + *a.location);
  for (const auto& [k, v] : a.extra) parts.push_back(k + ": " + v);
  return parts.empty() ? "unknown" : text::join(parts, "; ");
}

json to_json(const UserAttributes& a) {
  json j = {{"user_id", a.user_id}};
  if (a.age) j["age"] = *a.age;
  if (a.gender) j["gender"] = *a.gender;
  if (a.location) j["location"] = *a.location;
  if (!a.extra.empty()) {
    json e = json::object();
    for (const auto& [k, v] : a.extra) e[k] = v;
    j["extra"] = e;
  }
  return j;
}

UserAttributes attributes_from_json(const json& j) {
  UserAttributes a;
  a.user_id = j.at("user_id").get<std::string>();
  if (j.contains("age") && !j.at("age").is_null()) a.age = j.at("age").get<int>();
  if (j.contains("gender") && j.at("gender").is_string()) a.gender = j.at("gender").get<std::string>();
  if (j.contains("location") && j.at("location").is_string()) {
    a.location = j.at("location").get<std::string>();
  }
  if (j.contains("extra") && j.at("extra").is_object()) {
    for (const auto& [k, v] : j.at("extra").items()) {
      a.extra.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  validate(a);
  return a;
}

std::map<std::string, UserAttributes> load_users(const std::filesystem::path& path) {
  std::map<std::string, UserAttributes> out;
  for (const auto& line : io::read_lines(path)) {
    if (text::trim(line).empty()) continue;
    UserAttributes a = attributes_from_json(json::parse(line));
    out[a.user_id] = std::move(a);
  }
  return out;
}

CategoryInterests load_category_interests(const std::filesystem::path& path) {
  const json j = json::parse(io::read_file(path));
  CategoryInterests out;
  for (const auto& c : j.at("categories")) {
    if (c.contains("interest") && c.at("interest").is_string()) {
      out[c.at("id").get<std::string>()] = c.at("interest").get<std::string>();
    }
  }
  return out;
}

InterestPool match_pool(const compress::CompressedBehaviorLog& log,
                        const CategoryInterests& taxonomy, std::size_t m) {
  if (taxonomy.empty()) throw ValidationError("taxonomy is empty");
  std::map<std::string, std::size_t> freq;
  for (const auto& g : log.groups) {
    for (const auto& item : g.items) {
      auto it = taxonomy.find(item.category);
      if (it != taxonomy.end()) freq[it->second] += g.contexts.size();
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  InterestPool pool;
  for (std::size_t i = 0; i < std::min(m, ranked.size()); ++i) {
    pool.interests.push_back(ranked[i].first);
  }
  return pool;
}

bool InterestProfile::has_flag(std::string_view f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

std::vector<std::string> InterestProfile::labels() const {
  std::vector<std::string> out;
  for (const auto& i : interests) out.push_back(i.label);
  return out;
}

std::vector<ProfileInterest> filtered(const InterestProfile& p) {
  std::vector<ProfileInterest> out;
  for (const auto& i : p.interests) {
    if (i.verdict && i.verdict->pass) out.push_back(i);
  }
  return out;
}

std::optional<double> pass_rate(const InterestProfile& p) {
  if (p.interests.empty()) return std::nullopt;
  return static_cast<double>(filtered(p).size()) / static_cast<double>(p.interests.size());
}

InterestProfile mine_interests(llm::LlmGateway& gateway, const UserAttributes& attrs,
                               const compress::CompressedBehaviorLog& log,
                               const InterestPool& pool, const MiningOptions& opts) {
  validate(attrs);
  llm::LlmRequest req;
  req.tmpl = opts.tmpl ? opts.tmpl : &llm::default_template(llm::Task::kInterestMining);
  req.bindings = {{"user_attributes", render_attributes(attrs)},
                  {"compressed_behaviors", log.rendered},
                  {"matched_interest_pool", llm::bullet_list(pool.interests)}};
  req.seed = opts.seed;
  req.temperature = opts.temperature;
  const llm::Completion out = gateway.complete(req);
  const auto parsed = llm::parse_interests(out.text);

  InterestProfile p;
  p.user_id = attrs.user_id;
  p.generated_at = opts.now;
  std::set<std::string> seen;
  for (const auto& pi : parsed.items) {
    if (!seen.insert(text::casefold(text::trim(pi.interest))).second) continue;
    p.interests.push_back({std::string(text::trim(pi.interest)), pi.stage, pi.reason, {}});
  }
  if (parsed.mode == llm::ParseMode::kRepaired) p.flags.push_back(kFlagRepaired);
  if (p.interests.empty()) {
    p.flags.push_back(kFlagEmpty);
  } else if (p.interests.size() < opts.floor) {
    p.flags.push_back(kFlagUnderFloor);
  }
  return p;
}

json judge_history(const events::BehaviorLog& log) {
  json out = json::array();
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : log.events) {
    if (!events::reliable(e.behavior)) continue;
    std::string title = e.behavior == events::BehaviorKind::kSearch && e.item_title.empty()
                            ? e.query_text
                            : e.item_title;
    if (title.empty() && e.category_id.empty()) continue;
    if (!seen.emplace(title, e.category_id).second) continue;
    out.push_back({{"title", title}, {"category", e.category_id}});
  }
  return out;
}

json interest_payload(const ProfileInterest& interest, const json& history) {
  return {{"interest", interest.label},
          {"reason", interest.reason},
          {"stage", interest.stage},
          {"history", history}};
}

InterestProfile screen_interests(const InterestProfile& profile,
                                 judge::VerdictProvider& provider, const json& history,
                                 const ScreenOptions& opts) {
  InterestProfile out = profile;
  std::vector<json> unjudged;
  try {
    for (auto& i : out.interests) {
      const json payload = interest_payload(i, history);
      i.verdict = judge::judge_payload(llm::Task::kInterestMining, payload, provider);
      if (!i.verdict) unjudged.push_back(payload);
    }
  } catch (const Error&) {
    out = profile;
    for (auto& i : out.interests) i.verdict.reset();
    if (!out.has_flag(kFlagUnscreened)) out.flags.push_back(kFlagUnscreened);
    return out;
  }
  if (opts.buffer) {
    for (const auto& payload : unjudged) {
      judge::JudgeSample s;
      s.task = llm::Task::kInterestMining;
      s.payload = payload;
      s.round = opts.round;
      s.created_at = profile.generated_at;
      s.sample_id = fmt::format("interest:{}:{}:{}", profile.user_id, opts.round,
                                payload.at("interest").get<std::string>());
      if (!opts.buffer->get(s.sample_id)) opts.buffer->enqueue(std::move(s));
    }
  }
  return out;
}

json to_json(const InterestProfile& p) {
  json arr = json::array();
  for (const auto& i : p.interests) {
    json e = {{"label", i.label}, {"stage", i.stage}, {"reason", i.reason}};
    if (i.verdict) e["verdict"] = judge::to_json(*i.verdict);
    arr.push_back(std::move(e));
  }
  json j = {{"user_id", p.user_id}, {"generated_at", p.generated_at}, {"interests", arr}};
  if (!p.flags.empty()) j["flags"] = p.flags;
  return j;
}

InterestProfile profile_from_json(const json& j) {
  InterestProfile p;
  p.user_id = j.at("user_id").get<std::string>();
  p.generated_at = j.value("generated_at", Timestamp{0});
  std::set<std::string> seen;
  for (const auto& e : j.at("interests")) {
    ProfileInterest i;
    i.label = e.at("label").get<std::string>();
    i.stage = e.value("stage", std::string());
    i.reason = e.value("reason", std::string());
    if (e.contains("verdict")) {
      i.verdict = judge::verdict_from_json(llm::Task::kInterestMining, e.at("verdict"));
    }
    if (!seen.insert(text::casefold(i.label)).second) {
      throw ValidationError(fmt::format("duplicate interest label '{}'", i.label));
    }
    p.interests.push_back(std::move(i));
  }
  if (j.contains("flags")) p.flags = j.at("flags").get<std::vector<std::string>>();
  return p;
}

std::vector<InterestProfile> load_profiles(const std::filesystem::path& path) {
  std::vector<InterestProfile> out;
  if (!std::filesystem::exists(path)) return out;
  for (const auto& line : io::read_lines(path)) {
    if (text::trim(line).empty()) continue;
    out.push_back(profile_from_json(json::parse(line)));
  }
  return out;
}

void upsert_profile(const std::filesystem::path& path, const InterestProfile& p) {
  std::vector<InterestProfile> all = load_profiles(path);
  bool replaced = false;
  for (auto& q : all) {
    if (q.user_id == p.user_id) {
      q = p;
      replaced = true;
    }
  }
  if (!replaced) all.push_back(p);
  std::string body;
  for (const auto& q : all) body += to_json(q).dump() + "\n";
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  io::write_file_atomic(path, body);
}

std::optional<InterestProfile> find_profile(const std::filesystem::path& path,
                                            std::string_view user_id) {
  for (auto& p : load_profiles(path)) {
    if (p.user_id == user_id) return p;
  }
  return std::nullopt;
}

}  // namespace tagrec::mining
