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

#ifndef TAGREC_LLM_STUB_PROVIDER_HPP_
#define TAGREC_LLM_STUB_PROVIDER_HPP_

#include <atomic>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagrec/llm/provider.hpp"

namespace tagrec::llm {

// Fixture material the stub samples from.
struct StubBank {
  // Interests offered after the matched pool is exhausted.
  std::vector<std::string> extra_interests;
  std::map<std::string, std::vector<std::string>> tags_by_interest;
  // Used once every profile interest is out of tags.
  std::vector<std::string> filler_tags;
  std::vector<std::string> explanations;
  // Case-folded keyword found in the item text -> interest label, for the
  // interest-completion task.
  std::map<std::string, std::string> interest_by_keyword;
};

struct StubKnobs {
  std::size_t interest_count = 12;
  std::size_t tag_count = 50;      // used when the prompt does not say
  bool malformed = false;          // prose wrapper and trailing commas
  bool garbage = false;            // beyond repair
  bool hallucinated_tag = false;   // appends "Smart coaster"
  bool duplicates = false;         // repeats the first interest/tag
  bool think = false;              // prefix a <think> block
  bool refuse = false;             // ContentError
  int transient_failures = 0;      // first N calls throw TransientError
  std::optional<std::string> explanation_override;
  double judge_flip_rate = 0.0;    // fraction of criteria given a failing label
  bool judge_garbage = false;
};

inline constexpr const char* kHallucinatedTag = "Smart coaster";

// Deterministic provider: the output is a pure function of the task, the
// bindings and the seed (knobs aside). `transient_failures` is the only
// state.
class StubProvider : public Provider {
 public:
  explicit StubProvider(StubBank bank, StubKnobs knobs = {});

  std::string name() const override { return "stub"; }
  ChatResponse complete(const ChatRequest& request) override;

  StubKnobs& knobs() { return knobs_; }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::string interests(const ChatRequest& r, std::uint64_t seed) const;
  std::string tags(const ChatRequest& r, std::uint64_t seed) const;
  std::string explanation(const ChatRequest& r, std::uint64_t seed) const;
  std::string judge(const ChatRequest& r, std::uint64_t seed) const;
  std::string completion(const ChatRequest& r, std::uint64_t seed) const;

  StubBank bank_;
  StubKnobs knobs_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<int> failures_left_{0};
};

// Seed derived from the task, every binding and the request seed.
std::uint64_t stub_seed(const ChatRequest& request);

// Bullet-list helpers shared by the prompt builders and the stub so both
// sides agree on the wire form: one "- item" per line.
std::string bullet_list(const std::vector<std::string>& items);
std::vector<std::string> parse_bullets(std::string_view text);

}  // namespace tagrec::llm

#endif  // TAGREC_LLM_STUB_PROVIDER_HPP_
