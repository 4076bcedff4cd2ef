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

// Northern-hemisphere seasons and a small season-keyword lexicon.

#ifndef TAGREC_COMMON_SEASON_HPP_
#define TAGREC_COMMON_SEASON_HPP_

#include <set>
#include <string_view>

#include "tagrec/common/time.hpp"

namespace tagrec {

enum class Season { kSpring, kSummer, kAutumn, kWinter };

std::string_view to_string(Season s);
// Mar-May spring, Jun-Aug summer, Sep-Nov autumn, Dec-Feb winter (UTC).
Season season_of(Timestamp ts);
Season next_season(Season s);

// Seasons named by the lexicon in `text`: whole-word matches for Latin
// terms, substrings for CJK terms.
std::set<Season> seasons_in(std::string_view text);

// True when the text names no season, or names the current or the
// upcoming season at `now`.
bool in_season(std::string_view text, Timestamp now);

}  // namespace tagrec

#endif  // TAGREC_COMMON_SEASON_HPP_
