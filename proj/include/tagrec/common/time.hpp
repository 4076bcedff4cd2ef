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

#ifndef TAGREC_COMMON_TIME_HPP_
#define TAGREC_COMMON_TIME_HPP_

#include <cstdint>
#include <string>

namespace tagrec {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
};

// Proleptic Gregorian conversions (H. Hinnant's days_from_civil).
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);

CivilDate civil_from_timestamp(Timestamp ts);
Timestamp timestamp_from_civil(const CivilDate& d);

std::string format_day(Timestamp ts);    // YYYY-MM-DD
std::string format_month(Timestamp ts);  // YYYY-MM
std::string format_year(Timestamp ts);   // YYYY

}  // namespace tagrec

#endif  // TAGREC_COMMON_TIME_HPP_
