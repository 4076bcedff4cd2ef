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

#ifndef TAGREC_LLM_PROMPT_TEMPLATE_HPP_
#define TAGREC_LLM_PROMPT_TEMPLATE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace tagrec::llm {

enum class Task {
  kInterestMining,
  kTagPrediction,
  kExplanation,
  kJudge,
  kInterestCompletion,
};

std::string_view to_string(Task t);
std::optional<Task> parse_task(std::string_view s);

using Bindings = std::map<std::string, std::string, std::less<>>;

// A prompt body with `{{name}}` placeholders. Every placeholder occurs
// exactly once; construction throws ValidationError otherwise.
class PromptTemplate {
 public:
  PromptTemplate(Task task, std::string body);

  Task task() const { return task_; }
  const std::string& body() const { return body_; }
  const std::set<std::string>& required_placeholders() const {
    return required_;
  }

  // Exact substitution. Bound values are inserted verbatim and never
  // re-scanned. A missing binding throws ValidationError naming it.
  std::string instantiate(const Bindings& bindings) const;

 private:
  Task task_;
  std::string body_;
  std::set<std::string> required_;
};

// Built-in template for a task, compiled in from templates/<task>.txt.
const PromptTemplate& default_template(Task task);
PromptTemplate load_template(Task task, const std::filesystem::path& path);

}  // namespace tagrec::llm

#endif  // TAGREC_LLM_PROMPT_TEMPLATE_HPP_
