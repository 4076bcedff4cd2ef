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

#include "tagrec/tagging/tag_prediction.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/season.hpp"
#include "tagrec/common/text.hpp"
#include "tagrec/llm/stub_provider.hpp"
#include "tagrec/llm/structured.hpp"

namespace tagrec::tagging {

using events::BehaviorKind;
using nlohmann::json;

namespace {

std::string folded_trim(std::string_view s) { return text::casefold(text::trim(s)); }

bool has_cjk(std::string_view s) {
  for (char32_t c : text::decode_utf8(s)) {
    if (text::is_cjk(c)) return true;
  }
  return false;
}

void take_last(std::vector<std::string>& v, std::size_t n) {
  if (v.size() > n) v.erase(v.begin(), v.end() - static_cast<std::ptrdiff_t>(n));
}

}  // namespace

std::vector<std::string> TagPredictionSet::tags() const {
  std::vector<std::string> out;
  for (const auto& t : triplets) out.push_back(t.tag);
  return out;
}

Sequences render_sequences(const events::BehaviorLog& log, std::size_t max_per_sequence) {
  std::vector<std::string> click;
  std::vector<std::string> purchase;
  std::vector<std::string> search;
  for (const auto& e : log.events) {
    switch (e.behavior) {
      case BehaviorKind::kPurchase: purchase.push_back(e.item_title); break;
      case BehaviorKind::kSearch: search.push_back(e.query_text); break;
      default: click.push_back(e.item_title); break;
    }
  }
  for (auto* v : {&click, &purchase, &search}) {
    v->erase(std::remove(v->begin(), v->end(), std::string()), v->end());
    take_last(*v, max_per_sequence);
  }
  return {text::join(click, "; "), text::join(purchase, "; "), text::join(search, "; ")};
}

TagPredictionSet predict_tags(llm::LlmGateway& gateway, const mining::UserAttributes& attrs,
                              const mining::InterestProfile& profile,
                              const events::BehaviorLog& log, std::string_view extra,
                              const PredictOptions& opts) {
  mining::validate(attrs);
  if (profile.interests.empty() && !opts.allow_empty_profile) {
    throw ValidationError(
        fmt::format("user '{}' has an empty interest profile", attrs.user_id));
  }
  const Sequences seq = render_sequences(log, opts.max_sequence);
  llm::LlmRequest req;
  req.tmpl = opts.tmpl ? opts.tmpl : &llm::default_template(llm::Task::kTagPrediction);
  req.bindings = {{"user_attributes", mining::render_attributes(attrs)},
                  {"user_interests", llm::bullet_list(profile.labels())},
                  {"click_sequence", seq.click},
                  {"purchase_sequence", seq.purchase},
                  {"search_sequence", seq.search},
                  {"extra_information", std::string(extra)},
                  {"tag_count", std::to_string(opts.tag_count)}};
  req.seed = opts.seed;
  req.temperature = opts.temperature;
  const llm::Completion out = gateway.complete(req);
  const auto parsed = llm::parse_tags(out.text);

  TagPredictionSet s;
  s.user_id = attrs.user_id;
  s.generated_at = opts.now;
  std::set<std::string> seen;
  for (const auto& t : parsed.items) {
    if (!seen.insert(folded_trim(t.tag)).second) continue;
    s.triplets.push_back({std::string(text::trim(t.tag)), std::string(text::trim(t.interest)),
                          t.reason, std::nullopt});
  }
  if (parsed.mode == llm::ParseMode::kRepaired) s.flags.push_back(kFlagRepaired);
  return s;
}

FormatSplit check_format(std::string_view tag) {
  FormatSplit out;
  const std::vector<std::string> words = text::split_whitespace(text::trim(tag));
  if (words.size() >= 2) {
    const std::size_t n = std::min<std::size_t>(2, words.size() - 1);
    out.modifier = text::join({words.begin(), words.end() - static_cast<std::ptrdiff_t>(n)}, " ");
    out.core = text::join({words.end() - static_cast<std::ptrdiff_t>(n), words.end()}, " ");
  } else if (words.size() == 1 && has_cjk(words[0])) {
    const std::vector<char32_t> cps = text::decode_utf8(words[0]);
    if (cps.size() >= 3) {
      out.modifier = text::encode_utf8(std::vector<char32_t>(cps.begin(), cps.end() - 2));
      out.core = text::encode_utf8(std::vector<char32_t>(cps.end() - 2, cps.end()));
    }
  }
  out.ok = !out.modifier.empty() && !out.core.empty();
  if (!out.ok) {
    out.modifier.clear();
    out.core.clear();
  }
  return out;
}

bool check_freshness(std::string_view tag, const events::BehaviorLog& log, Timestamp now,
                     Timestamp horizon) {
  const FormatSplit split = check_format(tag);
  const std::string core = folded_trim(split.ok ? std::string_view(split.core) : tag);
  if (core.empty()) return true;
  for (const auto& e : log.events) {
    if (!events::reliable(e.behavior)) continue;
    if (e.timestamp <= now - horizon || e.timestamp >= now) continue;
    if (text::contains(text::casefold(e.item_title), core) ||
        text::contains(text::casefold(e.query_text), core)) {
      return false;
    }
  }
  return true;
}

const std::vector<std::string>& default_broad_terms() {
  static const std::vector<std::string> kTerms = {
      "equipment", "supplies", "products", "goods", "items",  "stuff", "things",
      "accessories", "essentials", "gear", "set", "kit", "用品", "装备"};
  return kTerms;
}

bool check_specificity(std::string_view tag, const std::vector<std::string>& broad_terms) {
  if (text::tokenize_words(tag).size() < 3) return false;
  const FormatSplit split = check_format(tag);
  const std::string core = text::casefold(split.ok ? split.core : std::string(tag));
  const auto core_words = text::tokenize_words(core);
  for (const auto& term : broad_terms) {
    const std::string t = text::casefold(term);
    if (has_cjk(t)) {
      if (text::contains(core, t)) return false;
    } else if (std::find(core_words.begin(), core_words.end(), t) != core_words.end()) {
      return false;
    }
  }
  return true;
}

ProbeValidity::ProbeValidity(const retrieval::TriTowerModel& model,
                             const retrieval::CatalogIndex& index, double threshold)
    : model_(model), index_(index), threshold_(threshold) {}

bool ProbeValidity::valid(std::string_view tag) const {
  const auto rows = model_.encode_tag(tag);
  const bool known = std::any_of(rows.begin(), rows.end(),
                                 [](std::size_t r) { return r != retrieval::kOovRow; });
  return known && retrieval::validity_probe(model_, tag, index_, threshold_);
}

double calibrate_validity(const retrieval::TriTowerModel& model,
                          const retrieval::CatalogIndex& index,
                          const std::vector<std::string>& tags, double q) {
  if (tags.empty() || index.size() == 0) throw ValidationError("nothing to calibrate on");
  if (!(q >= 0.0 && q <= 1.0)) throw RangeError("quantile outside [0, 1]");
  std::vector<double> best;
  for (const auto& t : tags) {
    const retrieval::Vec ht = model.embed_tag(t);
    best.push_back(retrieval::kernels::omp::max_score(ht, index.vectors, index.dim));
  }
  std::sort(best.begin(), best.end());
  const auto i = static_cast<std::size_t>(q * static_cast<double>(best.size() - 1));
  return best[i];
}

KeywordValidity::KeywordValidity(const retrieval::Catalog& catalog) {
  for (const auto& it : catalog.items()) {
    for (auto& w : text::tokenize_words(it.title)) words_.insert(std::move(w));
  }
}

bool KeywordValidity::valid(std::string_view tag) const {
  const FormatSplit split = check_format(tag);
  for (const auto& w : text::tokenize_words(split.ok ? split.core : std::string(tag))) {
    if (words_.count(w)) return true;
  }
  return false;
}

bool TripletFlags::all() const {
  return format_ok && interest_consistent && not_recently_interacted && specific && valid &&
         in_season;
}

TagConstraintReport validate_set(const TagPredictionSet& set,
                                 const mining::InterestProfile& profile,
                                 const events::BehaviorLog& log, Timestamp now,
                                 const ValidityOracle& validity,
                                 const ValidationConfig& cfg) {
  std::set<std::string> labels;
  for (const auto& l : profile.labels()) labels.insert(folded_trim(l));
  TagConstraintReport r;
  r.min_tags = cfg.min_tags;
  r.count_ok = set.triplets.size() >= cfg.min_tags;
  r.season_ok = true;
  for (const auto& t : set.triplets) {
    TripletFlags f;
    f.format_ok = check_format(t.tag).ok;
    f.interest_consistent = labels.count(folded_trim(t.interest)) > 0;
    f.not_recently_interacted = check_freshness(t.tag, log, now, cfg.horizon);
    f.specific = check_specificity(t.tag, cfg.broad_terms);
    f.valid = validity.valid(t.tag);
    f.in_season = in_season(t.tag, now);
    r.season_ok = r.season_ok && f.in_season;
    r.triplets.push_back(f);
  }
  return r;
}

json to_json(const TripletFlags& f) {
  return {{"format_ok", f.format_ok},
          {"interest_consistent", f.interest_consistent},
          {"not_recently_interacted", f.not_recently_interacted},
          {"specific", f.specific},
          {"valid", f.valid},
          {"in_season", f.in_season}};
}

json to_json(const TagConstraintReport& r) {
  json arr = json::array();
  for (const auto& f : r.triplets) arr.push_back(to_json(f));
  return {{"triplets", arr},
          {"count_ok", r.count_ok},
          {"season_ok", r.season_ok},
          {"min_tags", r.min_tags},
          {"specificity", "heuristic: >= 3 tokens and no broad core word"}};
}

json tag_payload(const TagTriplet& t, const mining::InterestProfile& profile,
                 const json& history, const TripletFlags& flags) {
  return {{"tag", t.tag},
          {"interest", t.interest},
          {"reason", t.reason},
          {"profile_interests", profile.labels()},
          {"history", history},
          {"specific", flags.specific},
          {"valid", flags.valid}};
}

TagPredictionSet screen_tags(const TagPredictionSet& set, const TagConstraintReport& report,
                             const mining::InterestProfile& profile, const json& history,
                             judge::VerdictProvider& provider,
                             const mining::ScreenOptions& opts) {
  if (report.triplets.size() != set.triplets.size()) {
    throw ValidationError("constraint report does not match the tag set");
  }
  TagPredictionSet out = set;
  std::vector<std::pair<std::string, json>> unjudged;
  try {
    for (std::size_t i = 0; i < out.triplets.size(); ++i) {
      auto& t = out.triplets[i];
      const json payload = tag_payload(t, profile, history, report.triplets[i]);
      t.verdict = judge::judge_payload(llm::Task::kTagPrediction, payload, provider);
      if (!t.verdict) unjudged.emplace_back(t.tag, payload);
    }
  } catch (const Error&) {
    out = set;
    for (auto& t : out.triplets) t.verdict.reset();
    return out;
  }
  if (opts.buffer) {
    for (const auto& [tag, payload] : unjudged) {
      judge::JudgeSample s;
      s.sample_id = fmt::format("tag:{}:{}:{}", set.user_id, opts.round, tag);
      s.task = llm::Task::kTagPrediction;
      s.payload = payload;
      s.round = opts.round;
      s.created_at = set.generated_at;
      if (!opts.buffer->get(s.sample_id)) opts.buffer->enqueue(s);
    }
  }
  return out;
}

json to_json(const TagPredictionSet& s) {
  json arr = json::array();
  for (const auto& t : s.triplets) {
    json e = {{"tag", t.tag}, {"interest", t.interest}, {"reason", t.reason}};
    if (t.verdict) e["verdict"] = judge::to_json(*t.verdict);
    arr.push_back(std::move(e));
  }
  json j = {{"user_id", s.user_id}, {"generated_at", s.generated_at}, {"triplets", arr}};
  if (!s.flags.empty()) j["flags"] = s.flags;
  return j;
}

TagPredictionSet tag_set_from_json(const json& j) {
  TagPredictionSet s;
  s.user_id = j.at("user_id").get<std::string>();
  s.generated_at = j.value("generated_at", Timestamp{0});
  std::set<std::string> seen;
  for (const auto& e : j.at("triplets")) {
    TagTriplet t;
    t.tag = e.at("tag").get<std::string>();
    t.interest = e.value("interest", std::string());
    t.reason = e.value("reason", std::string());
    if (e.contains("verdict")) {
      t.verdict = judge::verdict_from_json(llm::Task::kTagPrediction, e.at("verdict"));
    }
    if (!seen.insert(folded_trim(t.tag)).second) {
      throw ValidationError(fmt::format("duplicate tag '{}'", t.tag));
    }
    s.triplets.push_back(std::move(t));
  }
  if (j.contains("flags")) s.flags = j.at("flags").get<std::vector<std::string>>();
  return s;
}

std::vector<TagPredictionSet> load_tag_sets(const std::filesystem::path& path) {
  std::vector<TagPredictionSet> out;
  if (!std::filesystem::exists(path)) return out;
  for (const auto& line : io::read_lines(path)) {
    if (text::trim(line).empty()) continue;
    out.push_back(tag_set_from_json(json::parse(line)));
  }
  return out;
}

void upsert_tag_set(const std::filesystem::path& path, const TagPredictionSet& s) {
  std::vector<TagPredictionSet> all = load_tag_sets(path);
  bool replaced = false;
  for (auto& q : all) {
    if (q.user_id == s.user_id) {
      q = s;
      replaced = true;
    }
  }
  if (!replaced) all.push_back(s);
  std::string body;
  for (const auto& q : all) body += to_json(q).dump() + "\n";
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  io::write_file_atomic(path, body);
}

}  // namespace tagrec::tagging
