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

#include "tagrec/common/season.hpp"

#include <string>
#include <vector>

#include "tagrec/common/text.hpp"

namespace tagrec {

namespace {

struct Entry {
  Season season;
  std::vector<std::string> words;  // whole tokens
  std::vector<std::string> cjk;    // substrings
};

const std::vector<Entry>& lexicon() {
  static const std::vector<Entry> kLexicon = {
      {Season::kSpring, {"spring", "springtime"}, {"春"}},
      {Season::kSummer,
       {"summer", "swim", "swimsuit", "swimwear", "beach", "sunscreen", "sandals"},
       {"夏", "泳", "防晒"}},
      {Season::kAutumn, {"autumn", "fall"}, {"秋"}},
      {Season::kWinter,
       {"winter", "snow", "ski", "thermal", "parka", "heated", "insulated"},
       {"冬", "羽绒", "滑雪"}},
  };
  return kLexicon;
}

}  // namespace

std::string_view to_string(Season s) {
  switch (s) {
    case Season::kSpring: return "spring";
    case Season::kSummer: return "summer";
    case Season::kAutumn: return "autumn";
    case Season::kWinter: return "winter";
  }
  return "spring";
}

Season season_of(Timestamp ts) {
  const unsigned month = civil_from_timestamp(ts).month;
  if (month >= 3 && month <= 5) return Season::kSpring;
  if (month >= 6 && month <= 8) return Season::kSummer;
  if (month >= 9 && month <= 11) return Season::kAutumn;
  return Season::kWinter;
}

Season next_season(Season s) {
  switch (s) {
    case Season::kSpring: return Season::kSummer;
    case Season::kSummer: return Season::kAutumn;
    case Season::kAutumn: return Season::kWinter;
    case Season::kWinter: return Season::kSpring;
  }
  return Season::kSpring;
}

std::set<Season> seasons_in(std::string_view t) {
  const std::string folded = text::casefold(t);
  const auto tokens = text::tokenize_words(folded);
  const std::set<std::string> words(tokens.begin(), tokens.end());
  std::set<Season> out;
  for (const auto& e : lexicon()) {
    for (const auto& w : e.words) {
      if (words.count(w)) out.insert(e.season);
    }
    for (const auto& c : e.cjk) {
      if (text::contains(folded, c)) out.insert(e.season);
    }
  }
  return out;
}

bool in_season(std::string_view t, Timestamp now) {
  const std::set<Season> named = seasons_in(t);
  if (named.empty()) return true;
  const Season cur = season_of(now);
  return named.count(cur) > 0 || named.count(next_season(cur)) > 0;
}

}  // namespace tagrec
