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

#include "tagrec/explain/explanation.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/season.hpp"
#include "tagrec/common/text.hpp"
#include "tagrec/llm/structured.hpp"

namespace tagrec::explain {

using nlohmann::json;
using llm::Task;

bool ExplanationEntry::length_ok() const {
  const std::size_t n = text::count_graphemes(explanation);
  return n >= kMinLength && n <= kMaxLength;
}

std::string render_item(const retrieval::Item& item) {
  std::vector<std::string> parts = {"title: " + item.title};
  if (!item.category.empty()) parts.push_back("category: " + item.category);
  if (!item.brand.empty()) parts.push_back("brand: " + item.brand);
  if (item.price > 0) parts.push_back(fmt::format("price: {:.2f}", item.price));
  for (const auto& [k, v] : item.attrs) parts.push_back(k + ": " + v);
  return text::join(parts, "; ");
}

std::string render_date(Timestamp ts) {
  return fmt::format("{}, {}", format_day(ts), to_string(season_of(ts)));
}

ExplanationEntry generate_explanation(llm::LlmGateway& gateway, std::string_view interest,
                                      const retrieval::Item& item, Timestamp date,
                                      const GenerateOptions& opts) {
  if (text::trim(interest).empty()) throw ValidationError("interest: required");
  llm::LlmRequest req;
  req.tmpl = opts.tmpl ? opts.tmpl : &llm::default_template(Task::kExplanation);
  req.bindings = {{"user_interest", std::string(interest)},
                  {"date_information", render_date(date)},
                  {"item_information", render_item(item)}};
  req.seed = opts.seed;
  req.temperature = opts.temperature;
  const llm::Completion out = gateway.complete(req);
  const auto parsed = llm::parse_explanation(out.text);
  if (parsed.items.empty() || text::trim(parsed.items.front().explanation).empty()) {
    throw ParseError("no explanation in model output", out.text);
  }
  ExplanationEntry e;
  e.interest = std::string(interest);
  e.item_id = item.item_id;
  e.explanation = std::string(text::trim(parsed.items.front().explanation));
  e.generated_at = date;
  return e;
}

json explanation_payload(const ExplanationEntry& e, const retrieval::Item& item) {
  return {{"interest", e.interest},
          {"item_id", e.item_id},
          {"item_title", item.title},
          {"category", item.category},
          {"explanation", e.explanation},
          {"length", text::count_graphemes(e.explanation)}};
}

void screen_explanation(ExplanationEntry& e, const retrieval::Item& item,
                        judge::VerdictProvider& provider) {
  auto v = judge::judge_payload(Task::kExplanation, explanation_payload(e, item), provider);
  if (!v) {
    e.verdict.reset();
    return;
  }
  if (!e.length_ok()) {
    judge::Criteria c = v->criteria;
    c["clarity"] = "Bad";
    v = judge::make_verdict(Task::kExplanation, std::move(c));
  }
  e.verdict = std::move(v);
}

InterestLinks link_interests(const std::vector<tagging::TagPredictionSet>& sets,
                             const CategoryOf& category_of, const InterestLinks& overrides) {
  InterestLinks out;
  for (const auto& s : sets) {
    for (const auto& t : s.triplets) {
      if (t.interest.empty()) continue;
      const std::string c = category_of ? category_of(t.tag) : std::string();
      if (!c.empty()) out[t.interest].insert(c);
    }
  }
  for (const auto& [i, cats] : overrides) out[i].insert(cats.begin(), cats.end());
  return out;
}

InterestLinks load_link_overrides(const std::filesystem::path& path) {
  const json j = json::parse(io::read_file(path));
  if (!j.is_object()) throw ValidationError("link overrides: expected an object");
  InterestLinks out;
  for (const auto& [interest, cats] : j.items()) {
    for (const auto& c : cats) out[interest].insert(c.get<std::string>());
  }
  return out;
}

PairReport pair_candidates(const std::vector<mining::InterestProfile>& profiles,
                           const InterestLinks& links, const retrieval::Catalog& catalog) {
  std::set<std::string> interests;
  for (const auto& p : profiles) {
    for (const auto& i : p.interests) interests.insert(i.label);
  }
  const auto by_cat = catalog.by_category();
  PairReport r;
  std::set<Pair> pairs;
  for (const auto& i : interests) {
    auto it = links.find(i);
    if (it == links.end() || it->second.empty()) {
      r.unlinked.push_back(i);
      continue;
    }
    for (const auto& c : it->second) {
      auto items = by_cat.find(c);
      if (items == by_cat.end()) continue;
      for (std::size_t idx : items->second) pairs.insert({i, catalog.at(idx).item_id});
    }
  }
  r.pairs.assign(pairs.begin(), pairs.end());
  return r;
}

std::string ExplanationTable::key(std::string_view interest, std::string_view item_id) {
  std::string k(interest);
  k.push_back('\0');
  k.append(item_id);
  return k;
}

bool ExplanationTable::insert(ExplanationEntry e) {
  const std::string k = key(e.interest, e.item_id);
  return entries_.emplace(k, std::move(e)).second;
}

const ExplanationEntry* ExplanationTable::find(std::string_view interest,
                                               std::string_view item_id) const {
  auto it = entries_.find(key(interest, item_id));
  return it == entries_.end() ? nullptr : &it->second;
}

bool ExplanationTable::contains(std::string_view interest, std::string_view item_id) const {
  return find(interest, item_id) != nullptr;
}

std::vector<const ExplanationEntry*> ExplanationTable::entries() const {
  std::vector<const ExplanationEntry*> out;
  for (const auto& [_, e] : entries_) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return std::tie(a->interest, a->item_id) < std::tie(b->interest, b->item_id);
  });
  return out;
}

BuildReport build_table(ExplanationTable& table, const std::vector<Pair>& pairs,
                        const retrieval::Catalog& catalog, const Generator& generator,
                        judge::VerdictProvider* judge) {
  BuildReport r;
  for (const auto& p : pairs) {
    if (table.contains(p.interest, p.item_id)) {
      ++r.skipped_existing;
      continue;
    }
    const std::size_t idx = catalog.find(p.item_id);
    if (idx == retrieval::Catalog::npos) {
      r.failed.push_back(p);
      continue;
    }
    const auto& item = catalog.at(idx);
    ExplanationEntry e;
    try {
      e = generator(p.interest, item);
      e.interest = p.interest;
      e.item_id = p.item_id;
      if (judge) screen_explanation(e, item, *judge);
    } catch (const std::exception&) {
      r.failed.push_back(p);
      continue;
    }
    ++r.generated;
    if (!e.verdict) {
      ++r.unscreened;
    } else if (e.verdict->pass) {
      ++r.passed;
    } else {
      ++r.flagged;
    }
    table.insert(std::move(e));
  }
  return r;
}

ExplanationEntry fallback_entry(const retrieval::Item& item) {
  ExplanationEntry e;
  e.item_id = item.item_id;
  // Whole leading words that fit; a cut inside the first word otherwise.
  std::string words;
  for (const auto& w : text::split_whitespace(item.title)) {
    const std::string next = words.empty() ? std::string(w) : words + " " + std::string(w);
    if (text::count_graphemes(next) > kMaxLength) break;
    words = next;
  }
  e.explanation = words.empty() ? text::truncate_graphemes(item.title, kMaxLength) : words;
  e.fallback = true;
  return e;
}

ExplanationEntry lookup(const ExplanationTable& table, const retrieval::Item& item,
                        const mining::InterestProfile& profile) {
  for (const auto& i : profile.interests) {
    if (!i.verdict || !i.verdict->pass) continue;
    const ExplanationEntry* e = table.find(i.label, item.item_id);
    if (e && e->verdict && e->verdict->pass) return *e;
  }
  return fallback_entry(item);
}

json to_json(const ExplanationEntry& e) {
  json j = {{"interest", e.interest},
            {"item_id", e.item_id},
            {"explanation", e.explanation},
            {"generated_at", e.generated_at}};
  if (e.verdict) j["verdict"] = judge::to_json(*e.verdict);
  if (e.fallback) j["fallback"] = true;
  return j;
}

ExplanationEntry entry_from_json(const json& j) {
  ExplanationEntry e;
  e.interest = j.at("interest").get<std::string>();
  e.item_id = j.at("item_id").get<std::string>();
  e.explanation = j.at("explanation").get<std::string>();
  e.generated_at = j.value("generated_at", Timestamp{0});
  if (j.contains("verdict")) e.verdict = judge::verdict_from_json(Task::kExplanation, j.at("verdict"));
  e.fallback = j.value("fallback", false);
  if (e.item_id.empty()) throw ValidationError("explanation entry: item_id required");
  return e;
}

namespace {

std::filesystem::path index_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".idx";
  return p;
}

}  // namespace

void save_table(const ExplanationTable& table, const std::filesystem::path& path) {
  std::string body;
  std::string index;
  for (const auto* e : table.entries()) {
    const std::string row = to_json(*e).dump();
    index += json{{"interest", e->interest},
                  {"item_id", e->item_id},
                  {"offset", body.size()},
                  {"length", row.size()}}
                 .dump() +
             "\n";
    body += row + "\n";
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  io::write_file_atomic(path, body);
  io::write_file_atomic(index_path(path), index);
}

ExplanationTable load_table(const std::filesystem::path& path) {
  ExplanationTable t;
  if (!std::filesystem::exists(path)) return t;
  const std::string body = io::read_file(path);
  std::vector<json> index;
  if (std::filesystem::exists(index_path(path))) {
    for (const auto& line : io::read_lines(index_path(path))) {
      if (!text::trim(line).empty()) index.push_back(json::parse(line));
    }
  }
  std::size_t offset = 0;
  std::size_t row = 0;
  while (offset < body.size()) {
    std::size_t end = body.find('\n', offset);
    if (end == std::string::npos) end = body.size();
    const std::string_view line(body.data() + offset, end - offset);
    if (!text::trim(line).empty()) {
      ExplanationEntry e = entry_from_json(json::parse(line));
      if (row >= index.size() || index[row].at("offset").get<std::size_t>() != offset ||
          index[row].at("interest") != e.interest || index[row].at("item_id") != e.item_id) {
        throw ValidationError(fmt::format("{}: index does not match row {}", path.string(), row));
      }
      if (!t.insert(std::move(e))) {
        throw ValidationError(fmt::format("{}: duplicate key at row {}", path.string(), row));
      }
      ++row;
    }
    offset = end + 1;
  }
  if (row != index.size()) {
    throw ValidationError(fmt::format("{}: index has {} rows, table {}", path.string(),
                                      index.size(), row));
  }
  return t;
}

std::optional<ExplanationEntry> read_entry(const std::filesystem::path& path,
                                           std::string_view interest, std::string_view item_id) {
  const auto idx = index_path(path);
  if (!std::filesystem::exists(idx)) return std::nullopt;
  for (const auto& line : io::read_lines(idx)) {
    if (text::trim(line).empty()) continue;
    const json j = json::parse(line);
    if (j.at("interest") != interest || j.at("item_id") != item_id) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string row(j.at("length").get<std::size_t>(), '\0');
    in.seekg(static_cast<std::streamoff>(j.at("offset").get<std::size_t>()));
    in.read(row.data(), static_cast<std::streamsize>(row.size()));
    if (!in) throw ValidationError(path.string() + ": index points past the table");
    return entry_from_json(json::parse(row));
  }
  return std::nullopt;
}

}  // namespace tagrec::explain
