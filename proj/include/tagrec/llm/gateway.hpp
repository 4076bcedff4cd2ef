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

#ifndef TAGREC_LLM_GATEWAY_HPP_
#define TAGREC_LLM_GATEWAY_HPP_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>

#include "tagrec/llm/prompt_template.hpp"
#include "tagrec/llm/provider.hpp"

namespace tagrec::llm {

inline constexpr std::size_t kDefaultContextLimit = 128000;

struct LlmRequest {
  const PromptTemplate* tmpl = nullptr;
  Bindings bindings;
  std::size_t max_output_tokens = 4096;
  double temperature = 0.0;  // [0, 2]
  std::optional<std::uint64_t> seed;
};

struct GatewayConfig {
  int max_retries = 3;  // attempts = 1 + max_retries
  std::chrono::milliseconds base_backoff{100};
  bool cache = true;
  std::size_t context_limit = kDefaultContextLimit;
  std::ptrdiff_t max_in_flight = 4;
  // Replaceable so tests do not actually sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct Completion {
  std::string text;
  Usage usage;
  bool cached = false;
  int attempts = 0;
  std::uint64_t cache_key = 0;
};

class LlmGateway {
 public:
  static constexpr std::ptrdiff_t kMaxInFlight = 256;

  LlmGateway(std::shared_ptr<Provider> provider, GatewayConfig cfg = {});

  // Instantiates, enforces the context limit (RangeError), consults the
  // cache, then calls the provider with exponential backoff on
  // TransientError. Exhausted retries throw TransportError; ContentError
  // from the provider propagates without retry.
  Completion complete(const LlmRequest& request);

  Provider& provider() { return *provider_; }
  std::size_t provider_calls() const { return provider_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  std::size_t peak_in_flight() const { return peak_in_flight_.load(); }
  void clear_cache();

  static std::uint64_t cache_key(std::string_view provider,
                                 std::string_view prompt, double temperature,
                                 std::optional<std::uint64_t> seed);

 private:
  std::shared_ptr<Provider> provider_;
  GatewayConfig cfg_;
  std::counting_semaphore<kMaxInFlight> slots_;
  std::mutex cache_mu_;
  std::unordered_map<std::uint64_t, ChatResponse> cache_;
  std::atomic<std::size_t> provider_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_in_flight_{0};
};

}  // namespace tagrec::llm

#endif  // TAGREC_LLM_GATEWAY_HPP_
