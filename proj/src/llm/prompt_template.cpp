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

#include "tagrec/llm/prompt_template.hpp"

#include <vector>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"

namespace tagrec::llm {

namespace {

#include "default_templates.inc"

struct Span {
  std::size_t begin;  // offset of "{{"
  std::size_t end;    // one past "}}"
  std::string name;
};

bool valid_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

std::vector<Span> scan(std::string_view body) {
  std::vector<Span> spans;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string_view::npos) {
    const std::size_t close = body.find("}}", pos + 2);
    if (close == std::string_view::npos) break;
    std::string name(body.substr(pos + 2, close - pos - 2));
    bool ok = !name.empty();
    for (char c : name) ok = ok && valid_name_char(c);
    if (ok) {
      spans.push_back({pos, close + 2, std::move(name)});
      pos = close + 2;
    } else {
      pos += 2;
    }
  }
  return spans;
}

}  // namespace

std::string_view to_string(Task t) {
  switch (t) {
    case Task::kInterestMining: return "interest_mining";
    case Task::kTagPrediction: return "tag_prediction";
    case Task::kExplanation: return "explanation";
    case Task::kJudge: return "judge";
    case Task::kInterestCompletion: return "interest_completion";
  }
  return "interest_mining";
}

std::optional<Task> parse_task(std::string_view s) {
  for (Task t : {Task::kInterestMining, Task::kTagPrediction, Task::kExplanation,
                 Task::kJudge, Task::kInterestCompletion}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

PromptTemplate::PromptTemplate(Task task, std::string body)
    : task_(task), body_(std::move(body)) {
  for (const Span& s : scan(body_)) {
    if (!required_.insert(s.name).second) {
      throw ValidationError(
          fmt::format("placeholder '{}' occurs more than once", s.name));
    }
  }
}

std::string PromptTemplate::instantiate(const Bindings& bindings) const {
  for (const auto& name : required_) {
    if (!bindings.contains(name)) {
      throw ValidationError(
          fmt::format("missing binding for placeholder '{}'", name));
    }
  }
  std::string out;
  out.reserve(body_.size());
  std::size_t last = 0;
  for (const Span& s : scan(body_)) {
    out.append(body_, last, s.begin - last);
    out += bindings.find(s.name)->second;
    last = s.end;
  }
  out.append(body_, last);
  return out;
}

const PromptTemplate& default_template(Task task) {
  static const PromptTemplate interest(Task::kInterestMining, kInterestMiningTemplate);
  static const PromptTemplate tags(Task::kTagPrediction, kTagPredictionTemplate);
  static const PromptTemplate explanation(Task::kExplanation, kExplanationTemplate);
  static const PromptTemplate judge(Task::kJudge, kJudgeTemplate);
  static const PromptTemplate completion(Task::kInterestCompletion,
                                         kInterestCompletionTemplate);
  switch (task) {
    case Task::kInterestMining: return interest;
    case Task::kTagPrediction: return tags;
    case Task::kExplanation: return explanation;
    case Task::kJudge: return judge;
    case Task::kInterestCompletion: return completion;
  }
  return interest;
}

PromptTemplate load_template(Task task, const std::filesystem::path& path) {
  return PromptTemplate(task, io::read_file(path));
}

}  // namespace tagrec::llm
