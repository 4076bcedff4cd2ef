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

#include "tagrec/llm/gateway.hpp"

#include <algorithm>
#include <thread>

#include <fmt/format.h>

#include "tagrec/common/random.hpp"
#include "tagrec/common/text.hpp"

namespace tagrec::llm {

namespace {

std::ptrdiff_t clamp_slots(std::ptrdiff_t n) {
  if (n < 1 || n > LlmGateway::kMaxInFlight) {
    throw ConfigError(fmt::format("max_in_flight must be in [1, {}], got {}",
                                  LlmGateway::kMaxInFlight, n));
  }
  return n;
}

// Releases the in-flight slot on every exit path.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<LlmGateway::kMaxInFlight>& s)
      : s_(s) {
    s_.acquire();
  }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<LlmGateway::kMaxInFlight>& s_;
};

}  // namespace

LlmGateway::LlmGateway(std::shared_ptr<Provider> provider, GatewayConfig cfg)
    : provider_(std::move(provider)),
      cfg_(std::move(cfg)),
      slots_(clamp_slots(cfg_.max_in_flight)) {
  if (!provider_) throw ConfigError("gateway requires a provider");
  if (cfg_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (!cfg_.sleep) {
    cfg_.sleep = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

std::uint64_t LlmGateway::cache_key(std::string_view provider,
                                    std::string_view prompt, double temperature,
                                    std::optional<std::uint64_t> seed) {
  std::uint64_t h = fnv1a64(provider);
  h = fnv1a64(std::string_view("\x1f", 1), h);
  h = fnv1a64(prompt, h);
  h = fnv1a64(fmt::format("\x1f{:.17g}\x1f{}", temperature,
                          seed ? std::to_string(*seed) : std::string("-")),
              h);
  return h;
}

void LlmGateway::clear_cache() {
  std::lock_guard lock(cache_mu_);
  cache_.clear();
}

Completion LlmGateway::complete(const LlmRequest& request) {
  if (request.tmpl == nullptr) throw ValidationError("request has no template");
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
    throw ValidationError(
        fmt::format("temperature {} outside [0, 2]", request.temperature));
  }
  ChatRequest chat;
  chat.task = request.tmpl->task();
  chat.prompt = request.tmpl->instantiate(request.bindings);
  chat.bindings = request.bindings;
  chat.temperature = request.temperature;
  chat.seed = request.seed;
  chat.max_output_tokens = request.max_output_tokens;

  const std::size_t prompt_tokens = text::count_tokens(chat.prompt);
  if (prompt_tokens > cfg_.context_limit) {
    throw RangeError(fmt::format("prompt has {} tokens, context limit is {}",
                                 prompt_tokens, cfg_.context_limit));
  }

  Completion out;
  out.cache_key = cache_key(provider_->name(), chat.prompt, chat.temperature,
                            chat.seed);
  if (cfg_.cache) {
    std::lock_guard lock(cache_mu_);
    if (auto it = cache_.find(out.cache_key); it != cache_.end()) {
      ++cache_hits_;
      out.text = it->second.text;
      out.usage = it->second.usage;
      out.cached = true;
      return out;
    }
  }

  SlotGuard slot(slots_);
  const std::size_t now = ++in_flight_;
  std::size_t peak = peak_in_flight_.load();
  while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& n;
    ~Leave() { --n; }
  } leave{in_flight_};

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) cfg_.sleep(cfg_.base_backoff * (1LL << (attempt - 1)));
    ++provider_calls_;
    out.attempts = attempt + 1;
    try {
      ChatResponse resp = provider_->complete(chat);
      if (resp.usage.prompt_tokens == 0) resp.usage.prompt_tokens = prompt_tokens;
      out.text = resp.text;
      out.usage = resp.usage;
      if (cfg_.cache) {
        std::lock_guard lock(cache_mu_);
        cache_.emplace(out.cache_key, std::move(resp));
      }
      return out;
    } catch (const TransientError& e) {
      last_error = e.what();
    }
  }
  throw TransportError(fmt::format("{} failed after {} attempts: {}",
                                   provider_->name(), cfg_.max_retries + 1,
                                   last_error));
}

}  // namespace tagrec::llm
