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

// Offline interest-item-explanation table: generation, screening,
// candidate pairing through shared categories, and online lookup.

#ifndef TAGREC_EXPLAIN_EXPLANATION_HPP_
#define TAGREC_EXPLAIN_EXPLANATION_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tagrec/common/time.hpp"
#include "tagrec/judge/judge.hpp"
#include "tagrec/llm/gateway.hpp"
#include "tagrec/mining/interest_mining.hpp"
#include "tagrec/retrieval/dataset.hpp"
#include "tagrec/tagging/tag_prediction.hpp"

namespace tagrec::explain {

inline constexpr std::size_t kMinLength = 6;
inline constexpr std::size_t kMaxLength = 10;

struct ExplanationEntry {
  std::string interest;
  std::string item_id;
  std::string explanation;
  Timestamp generated_at = 0;
  std::optional<judge::QualityVerdict> verdict;
  bool fallback = false;

  bool length_ok() const;
  bool operator==(const ExplanationEntry&) const = default;
};

std::string render_item(const retrieval::Item& item);
std::string render_date(Timestamp ts);  // "YYYY-MM-DD, <season>"

struct GenerateOptions {
  std::optional<std::uint64_t> seed = 0;
  double temperature = 0.0;
  const llm::PromptTemplate* tmpl = nullptr;
};

// Throws ParseError carrying the raw text when no explanation parses.
ExplanationEntry generate_explanation(llm::LlmGateway& gateway, std::string_view interest,
                                      const retrieval::Item& item, Timestamp date,
                                      const GenerateOptions& opts = {});

nlohmann::json explanation_payload(const ExplanationEntry& e, const retrieval::Item& item);

// Attaches the judge's verdict. A length outside [6, 10] forces clarity
// to Bad whatever the judge said. No verdict leaves the entry unscreened.
void screen_explanation(ExplanationEntry& e, const retrieval::Item& item,
                        judge::VerdictProvider& provider);

// interest -> categories, from (tag, interest) pairs mapped through
// `category_of`, plus manual overrides.
using InterestLinks = std::map<std::string, std::set<std::string>>;
using CategoryOf = std::function<std::string(const std::string& tag)>;

InterestLinks link_interests(const std::vector<tagging::TagPredictionSet>& sets,
                             const CategoryOf& category_of, const InterestLinks& overrides = {});
InterestLinks load_link_overrides(const std::filesystem::path& path);

struct Pair {
  std::string interest;
  std::string item_id;
  auto operator<=>(const Pair&) const = default;
};

struct PairReport {
  std::vector<Pair> pairs;              // sorted, unique
  std::vector<std::string> unlinked;    // interests with no category
};

// (i, v) for every profile interest i and catalog item v whose category
// is linked to i.
PairReport pair_candidates(const std::vector<mining::InterestProfile>& profiles,
                           const InterestLinks& links, const retrieval::Catalog& catalog);

class ExplanationTable {
 public:
  // False (and no change) when the key is already present.
  bool insert(ExplanationEntry e);
  const ExplanationEntry* find(std::string_view interest, std::string_view item_id) const;
  bool contains(std::string_view interest, std::string_view item_id) const;
  std::size_t size() const { return entries_.size(); }
  // Sorted by (interest, item_id).
  std::vector<const ExplanationEntry*> entries() const;

 private:
  static std::string key(std::string_view interest, std::string_view item_id);
  std::unordered_map<std::string, ExplanationEntry> entries_;
};

using Generator =
    std::function<ExplanationEntry(const std::string& interest, const retrieval::Item& item)>;

struct BuildReport {
  std::size_t generated = 0;
  std::size_t skipped_existing = 0;
  std::size_t passed = 0;
  std::size_t flagged = 0;  // screened and failing
  std::size_t unscreened = 0;
  std::vector<Pair> failed;
};

// Generates every pair not yet in the table. Failing entries are kept.
BuildReport build_table(ExplanationTable& table, const std::vector<Pair>& pairs,
                        const retrieval::Catalog& catalog, const Generator& generator,
                        judge::VerdictProvider* judge);

// The longest run of leading title words within 10 graphemes, or the
// first 10 graphemes when the first word is longer (or the title has no
// spaces).
ExplanationEntry fallback_entry(const retrieval::Item& item);

// First pass-screened profile interest, in profile order, whose entry for
// the item passed; otherwise the fallback built from the item title.
ExplanationEntry lookup(const ExplanationTable& table, const retrieval::Item& item,
                        const mining::InterestProfile& profile);

nlohmann::json to_json(const ExplanationEntry& e);
ExplanationEntry entry_from_json(const nlohmann::json& j);

// JSONL rows sorted by key, plus `<path>.idx` with one
// {interest, item_id, offset, length} line per row.
void save_table(const ExplanationTable& table, const std::filesystem::path& path);
// Throws ValidationError when the index does not match the rows.
ExplanationTable load_table(const std::filesystem::path& path);
// Reads one row through the index without loading the table.
std::optional<ExplanationEntry> read_entry(const std::filesystem::path& path,
                                           std::string_view interest, std::string_view item_id);

}  // namespace tagrec::explain

#endif  // TAGREC_EXPLAIN_EXPLANATION_HPP_
