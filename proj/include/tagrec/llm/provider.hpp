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

#ifndef TAGREC_LLM_PROVIDER_HPP_
#define TAGREC_LLM_PROVIDER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "tagrec/common/error.hpp"
#include "tagrec/llm/prompt_template.hpp"

namespace tagrec::llm {

struct ChatRequest {
  Task task = Task::kInterestMining;
  std::string prompt;  // fully instantiated
  // The bindings the prompt was built from. Network providers ignore
  // them; the stub derives its output from them.
  Bindings bindings;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
  std::size_t max_output_tokens = 4096;
};

struct Usage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  Usage usage;
};

// Thrown by providers for failures worth retrying (timeouts, 5xx, 429).
class TransientError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "transient"; }
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string name() const = 0;
  // May throw TransientError or ContentError. Must be safe to call from
  // several threads at once.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

}  // namespace tagrec::llm

#endif  // TAGREC_LLM_PROVIDER_HPP_
