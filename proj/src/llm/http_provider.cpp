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

#include "tagrec/llm/http_provider.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>

namespace tagrec::llm {

using nlohmann::json;

HttpProviderConfig HttpProviderConfig::from_env() {
  HttpProviderConfig cfg;
  const char* endpoint = std::getenv("LLM_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    throw ConfigError("LLM_ENDPOINT is not set");
  }
  cfg.endpoint = endpoint;
  if (const char* key = std::getenv("LLM_API_KEY")) cfg.api_key = key;
  if (const char* model = std::getenv("LLM_MODEL")) cfg.model = model;
  return cfg;
}

Endpoint parse_endpoint(const std::string& url) {
  Endpoint ep;
  const std::size_t sep = url.find("://");
  if (sep == std::string::npos) {
    throw ConfigError(fmt::format("endpoint '{}' has no scheme", url));
  }
  ep.scheme = url.substr(0, sep);
  if (ep.scheme != "http" && ep.scheme != "https") {
    throw ConfigError(fmt::format("unsupported scheme '{}'", ep.scheme));
  }
  std::string rest = url.substr(sep + 3);
  const std::size_t slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  ep.path = slash == std::string::npos ? "/" : rest.substr(slash);
  const std::size_t colon = authority.rfind(':');
  if (colon != std::string::npos) {
    ep.host = authority.substr(0, colon);
    try {
      ep.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("bad port in endpoint '{}'", url));
    }
  } else {
    ep.host = authority;
    ep.port = ep.scheme == "https" ? 443 : 80;
  }
  if (ep.host.empty()) throw ConfigError(fmt::format("endpoint '{}' has no host", url));
  return ep;
}

json build_chat_body(const std::string& model, const ChatRequest& request) {
  json body = {
      {"model", model},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
  };
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

std::string extract_chat_content(const json& body) {
  if (!body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty()) {
    throw ContentError("response has no choices");
  }
  const json& choice = body["choices"][0];
  if (choice.value("finish_reason", "") == "content_filter") {
    throw ContentError("provider filtered the response");
  }
  const json& msg = choice.value("message", json::object());
  if (msg.contains("refusal") && msg["refusal"].is_string() &&
      !msg["refusal"].get<std::string>().empty()) {
    throw ContentError("provider refused: " + msg["refusal"].get<std::string>());
  }
  if (!msg.contains("content") || !msg["content"].is_string()) {
    throw ContentError("response message has no content");
  }
  std::string content = msg["content"].get<std::string>();
  if (content.empty()) throw ContentError("response content is empty");
  return content;
}

HttpChatProvider::HttpChatProvider(HttpProviderConfig cfg)
    : cfg_(std::move(cfg)), endpoint_(parse_endpoint(cfg_.endpoint)) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (endpoint_.scheme == "https") {
    throw ConfigError("https endpoints need a build with TAGREC_WITH_OPENSSL");
  }
#endif
}

ChatResponse HttpChatProvider::complete(const ChatRequest& request) {
  const std::string base =
      fmt::format("{}://{}:{}", endpoint_.scheme, endpoint_.host, endpoint_.port);
  httplib::Client client(base);
  const auto t = static_cast<time_t>(cfg_.timeout.count());
  client.set_connection_timeout(t, 0);
  client.set_read_timeout(t, 0);
  client.set_write_timeout(t, 0);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  }
  const std::string payload = build_chat_body(cfg_.model, request).dump();
  auto res = client.Post(endpoint_.path, headers, payload, "application/json");
  if (!res) {
    throw TransientError(
        fmt::format("request failed: {}", httplib::to_string(res.error())));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientError(fmt::format("HTTP {}", res->status));
  }
  if (res->status != 200) {
    throw ContentError(fmt::format("HTTP {}: {}", res->status, res->body));
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error&) {
    throw TransientError("response body is not JSON");
  }
  ChatResponse out;
  out.text = extract_chat_content(body);
  if (body.contains("usage") && body["usage"].is_object()) {
    out.usage.prompt_tokens = body["usage"].value("prompt_tokens", 0u);
    out.usage.completion_tokens = body["usage"].value("completion_tokens", 0u);
  }
  return out;
}

}  // namespace tagrec::llm
