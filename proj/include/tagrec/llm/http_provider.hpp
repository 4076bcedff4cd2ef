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

#ifndef TAGREC_LLM_HTTP_PROVIDER_HPP_
#define TAGREC_LLM_HTTP_PROVIDER_HPP_

#include <chrono>
#include <string>

#include <json.hpp>

#include "tagrec/llm/provider.hpp"

namespace tagrec::llm {

struct HttpProviderConfig {
  std::string endpoint;  // e.g. http://localhost:8000/v1/chat/completions
  std::string api_key;
  std::string model = "default";
  std::chrono::seconds timeout{120};

  // Reads LLM_ENDPOINT, LLM_API_KEY and (optionally) LLM_MODEL. Throws
  // ConfigError when LLM_ENDPOINT is unset.
  static HttpProviderConfig from_env();
};

struct Endpoint {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;
};

Endpoint parse_endpoint(const std::string& url);

// OpenAI-compatible request body: {model, messages, temperature, seed,
// max_tokens}.
nlohmann::json build_chat_body(const std::string& model,
                               const ChatRequest& request);
// Extracts choices[0].message.content. A content_filter finish reason or
// a refusal field throws ContentError.
std::string extract_chat_content(const nlohmann::json& body);

class HttpChatProvider : public Provider {
 public:
  explicit HttpChatProvider(HttpProviderConfig cfg);

  std::string name() const override { return "http:" + cfg_.model; }
  ChatResponse complete(const ChatRequest& request) override;

 private:
  HttpProviderConfig cfg_;
  Endpoint endpoint_;
};

}  // namespace tagrec::llm

#endif  // TAGREC_LLM_HTTP_PROVIDER_HPP_
