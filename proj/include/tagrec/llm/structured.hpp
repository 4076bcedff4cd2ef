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

#ifndef TAGREC_LLM_STRUCTURED_HPP_
#define TAGREC_LLM_STRUCTURED_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tagrec::llm {

struct ParsedInterest {
  std::string id;
  std::string interest;
  std::string stage;
  std::string reason;

  bool operator==(const ParsedInterest&) const = default;
};

struct ParsedTag {
  std::string tag;
  std::string interest;
  std::string reason;

  bool operator==(const ParsedTag&) const = default;
};

struct ParsedExplanation {
  std::string explanation;

  bool operator==(const ParsedExplanation&) const = default;
};

enum class ParseMode { kStrict, kRepaired };

std::string_view to_string(ParseMode m);

template <typename T>
struct Parsed {
  std::vector<T> items;
  ParseMode mode = ParseMode::kStrict;
  std::size_t dropped = 0;  // elements present but missing required fields
};

// Removes <think>...</think> spans (and an unterminated trailing one).
std::string strip_thinking(std::string_view raw);

// Single conservative repair: keep the text from the first `open` bracket
// to the last `close` bracket, then delete commas that directly precede a
// closing bracket outside string literals.
std::string repair_json(std::string_view raw, char open, char close);

// Strict parse of the whole (thinking-stripped) text, falling back to one
// repair pass. Throws ParseError, carrying the raw text, when both fail.
nlohmann::json parse_json_block(std::string_view raw, char open, char close,
                                ParseMode& mode);

Parsed<ParsedInterest> parse_interests(std::string_view raw);
Parsed<ParsedTag> parse_tags(std::string_view raw);
// Accepts the "Explation" key as well as "Explanation".
Parsed<ParsedExplanation> parse_explanation(std::string_view raw);

// Canonical JSON for parsed outputs; parsing these yields the input back
// with mode kStrict.
std::string render_interests(const std::vector<ParsedInterest>& v);
std::string render_tags(const std::vector<ParsedTag>& v);
std::string render_explanation(const ParsedExplanation& e);

}  // namespace tagrec::llm

#endif  // TAGREC_LLM_STRUCTURED_HPP_
