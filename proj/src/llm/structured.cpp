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

#include "tagrec/llm/structured.hpp"

#include "tagrec/common/error.hpp"
#include "tagrec/common/text.hpp"

namespace tagrec::llm {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return {};
  return std::string(text::trim(it->get<std::string>()));
}

json as_array(json j) {
  if (j.is_array()) return j;
  // A lone object is accepted as a one-element list.
  if (j.is_object()) return json::array({std::move(j)});
  return json::array();
}

}  // namespace

std::string_view to_string(ParseMode m) {
  return m == ParseMode::kStrict ? "strict" : "repaired";
}

std::string strip_thinking(std::string_view raw) {
  std::string out;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const std::size_t open = raw.find("<think>", pos);
    if (open == std::string_view::npos) {
      out.append(raw.substr(pos));
      break;
    }
    out.append(raw.substr(pos, open - pos));
    const std::size_t close = raw.find("</think>", open);
    if (close == std::string_view::npos) break;
    pos = close + 8;
  }
  return out;
}

std::string repair_json(std::string_view raw, char open, char close) {
  const std::size_t first = raw.find(open);
  const std::size_t last = raw.rfind(close);
  if (first == std::string_view::npos || last == std::string_view::npos ||
      last < first) {
    return {};
  }
  std::string_view body = raw.substr(first, last - first + 1);
  std::string out;
  out.reserve(body.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (in_string) {
      out += c;
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < body.size() &&
             (body[j] == ' ' || body[j] == '\t' || body[j] == '\n' ||
              body[j] == '\r')) {
        ++j;
      }
      if (j < body.size() && (body[j] == ']' || body[j] == '}')) continue;
    }
    out += c;
  }
  return out;
}

json parse_json_block(std::string_view raw, char open, char close,
                      ParseMode& mode) {
  const std::string stripped = strip_thinking(raw);
  const std::string_view body = text::trim(stripped);
  if (!body.empty() && body.front() == open) {
    try {
      mode = ParseMode::kStrict;
      return json::parse(body);
    } catch (const json::parse_error&) {
    }
  }
  const std::string fixed = repair_json(body, open, close);
  if (!fixed.empty()) {
    try {
      mode = ParseMode::kRepaired;
      return json::parse(fixed);
    } catch (const json::parse_error&) {
    }
  }
  throw ParseError("structured output could not be parsed", std::string(raw));
}

Parsed<ParsedInterest> parse_interests(std::string_view raw) {
  Parsed<ParsedInterest> out;
  const json arr = as_array(parse_json_block(raw, '[', ']', out.mode));
  for (const auto& el : arr) {
    if (!el.is_object()) {
      ++out.dropped;
      continue;
    }
    ParsedInterest p{string_field(el, "ID"), string_field(el, "Interest"),
                     string_field(el, "Stage"), string_field(el, "Reason")};
    if (p.interest.empty() || p.reason.empty()) {
      ++out.dropped;
      continue;
    }
    out.items.push_back(std::move(p));
  }
  if (out.items.empty() && out.dropped > 0) {
    throw ParseError("no interest entry carries Interest and Reason",
                     std::string(raw));
  }
  return out;
}

Parsed<ParsedTag> parse_tags(std::string_view raw) {
  Parsed<ParsedTag> out;
  const json arr = as_array(parse_json_block(raw, '[', ']', out.mode));
  for (const auto& el : arr) {
    if (!el.is_object()) {
      ++out.dropped;
      continue;
    }
    ParsedTag p{string_field(el, "Item Tag"), string_field(el, "Interest"),
                string_field(el, "Reason")};
    if (p.tag.empty() || p.interest.empty() || p.reason.empty()) {
      ++out.dropped;
      continue;
    }
    out.items.push_back(std::move(p));
  }
  if (out.items.empty() && out.dropped > 0) {
    throw ParseError("no tag entry carries Item Tag, Interest and Reason",
                     std::string(raw));
  }
  return out;
}

Parsed<ParsedExplanation> parse_explanation(std::string_view raw) {
  Parsed<ParsedExplanation> out;
  json j = parse_json_block(raw, '{', '}', out.mode);
  if (j.is_array() && !j.empty()) j = j.front();
  std::string text;
  if (j.is_object()) {
    text = string_field(j, "Explation");
    if (text.empty()) text = string_field(j, "Explanation");
  }
  if (text.empty()) {
    throw ParseError("explanation field missing or empty", std::string(raw));
  }
  out.items.push_back({std::move(text)});
  return out;
}

std::string render_interests(const std::vector<ParsedInterest>& v) {
  ojson arr = ojson::array();
  for (const auto& p : v) {
    arr.push_back(ojson{{"ID", p.id},
                        {"Interest", p.interest},
                        {"Stage", p.stage},
                        {"Reason", p.reason}});
  }
  return arr.dump(2);
}

std::string render_tags(const std::vector<ParsedTag>& v) {
  ojson arr = ojson::array();
  for (const auto& p : v) {
    arr.push_back(
        ojson{{"Item Tag", p.tag}, {"Interest", p.interest}, {"Reason", p.reason}});
  }
  return arr.dump(2);
}

std::string render_explanation(const ParsedExplanation& e) {
  return ojson{{"Explation", e.explanation}}.dump();
}

}  // namespace tagrec::llm
