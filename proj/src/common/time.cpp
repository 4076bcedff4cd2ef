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

#include "tagrec/common/time.hpp"

#include <fmt/format.h>

namespace tagrec {

std::int64_t days_from_civil(const CivilDate& d) {
  const int y = static_cast<int>(d.month <= 2 ? d.year - 1 : d.year);
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned mp = d.month > 2 ? d.month - 3 : d.month + 9;
  const unsigned doy = (153 * mp + 2) / 5 + d.day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return CivilDate{static_cast<int>(m <= 2 ? y + 1 : y), m, d};
}

CivilDate civil_from_timestamp(Timestamp ts) {
  std::int64_t days = ts / kSecondsPerDay;
  if (ts % kSecondsPerDay < 0) --days;
  return civil_from_days(days);
}

Timestamp timestamp_from_civil(const CivilDate& d) {
  return days_from_civil(d) * kSecondsPerDay;
}

std::string format_day(Timestamp ts) {
  const CivilDate d = civil_from_timestamp(ts);
  return fmt::format("{:04d}-{:02d}-{:02d}", d.year, d.month, d.day);
}

std::string format_month(Timestamp ts) {
  const CivilDate d = civil_from_timestamp(ts);
  return fmt::format("{:04d}-{:02d}", d.year, d.month);
}

std::string format_year(Timestamp ts) {
  return fmt::format("{:04d}", civil_from_timestamp(ts).year);
}

}  // namespace tagrec
