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

#include "tagrec/pipeline/service.hpp"

#include <charconv>
#include <mutex>

#include <fmt/format.h>
#include <httplib.h>

#include "tagrec/common/error.hpp"
#include "tagrec/judge/verdict.hpp"

namespace tagrec::pipeline {

using nlohmann::json;

json error_body(const std::string& kind, const std::string& message) {
  json e = {{"kind", kind}, {"message", message}};
  const std::size_t colon = message.find(": ");
  if (colon != std::string::npos && colon > 0 &&
      message.find(' ') >= colon) {
    e["field"] = message.substr(0, colon);
  }
  return {{"error", e}};
}

namespace {

int status_for(const Error& e) {
  const std::string k = e.kind();
  if (k == "validation" || k == "range" || k == "parse") return 400;
  if (k == "not_found") return 404;
  return 500;
}

}  // namespace

Api::Api(judge::JudgeBuffer& buffer, Pipeline* pipeline, judge::DriftConfig drift, double gate)
    : buffer_(buffer), pipeline_(pipeline), drift_(drift), gate_(gate) {}

ApiResponse Api::queue(const std::string& task, const std::string& limit) const {
  std::optional<llm::Task> t;
  if (!task.empty()) {
    t = llm::parse_task(task);
    if (!t) return {400, error_body("validation", "task: unknown task '" + task + "'")};
  }
  std::size_t n = 0;
  if (!limit.empty()) {
    const auto [p, ec] = std::from_chars(limit.data(), limit.data() + limit.size(), n);
    if (ec != std::errc() || p != limit.data() + limit.size()) {
      return {400, error_body("validation", "limit: expected a non-negative integer")};
    }
  }
  const json all = judge::schemas_json();
  json out = json::array();
  for (const auto& s : buffer_.pending(t, n)) {
    json j = judge::to_json(s);
    j["schemas"] = all.at(std::string(llm::to_string(s.task)));
    out.push_back(std::move(j));
  }
  return {200, out};
}

ApiResponse Api::verdict(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    return {400, error_body("validation", "body: not valid JSON")};
  }
  if (!j.is_object()) return {400, error_body("validation", "body: expected an object")};
  if (!j.contains("sample_id") || !j.at("sample_id").is_string() ||
      j.at("sample_id").get<std::string>().empty()) {
    return {400, error_body("validation", "sample_id: required non-empty string")};
  }
  if (!j.contains("criteria") || !j.at("criteria").is_object()) {
    return {400, error_body("validation", "criteria: expected an object")};
  }
  const std::string id = j.at("sample_id").get<std::string>();
  judge::Criteria c;
  for (const auto& [k, v] : j.at("criteria").items()) {
    if (!v.is_string()) {
      return {400, error_body("validation", fmt::format("criteria.{}: expected a string label", k))};
    }
    c[k] = v.get<std::string>();
  }
  try {
    buffer_.record_human_verdict(id, c);
  } catch (const Error& e) {
    return {status_for(e), error_body(e.kind(), e.what())};
  }
  return {200, judge::to_json(*buffer_.get(id))};
}

ApiResponse Api::metrics() const {
  return {200, judge::metrics_report(buffer_.samples(), drift_, gate_)};
}

ApiResponse Api::schemas() const { return {200, judge::schemas_json()}; }

ApiResponse Api::run(const std::string& user_id) {
  if (!pipeline_) return {503, error_body("config", "pipeline: not configured")};
  try {
    return {200, to_json(pipeline_->run(user_id))};
  } catch (const StageError& e) {
    json b = error_body(e.cause_kind(), e.what());
    b["error"]["stage"] = e.stage();
    const int status = e.cause_kind() == "not_found" ? 404 : 500;
    return {status, b};
  } catch (const Error& e) {
    return {status_for(e), error_body(e.kind(), e.what())};
  }
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const std::size_t colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw ConfigError(fmt::format("bind: '{}' is not host:port", bind));
  }
  int port = 0;
  const char* b = bind.data() + colon + 1;
  const char* e = bind.data() + bind.size();
  const auto [p, ec] = std::from_chars(b, e, port);
  if (ec != std::errc() || p != e || port < 0 || port > 65535) {
    throw ConfigError(fmt::format("bind: bad port in '{}'", bind));
  }
  return {bind.substr(0, colon), port};
}

struct Service::Impl {
  Impl(judge::JudgeBuffer& buffer, Pipeline* pipeline, const PipelineConfig& cfg)
      : api(buffer, pipeline, judge::DriftConfig{cfg.judge_delta, 30}, cfg.judge_gate) {}
  Api api;
  httplib::Server server;
  std::mutex run_mu;
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json; charset=utf-8");
}

}  // namespace

Service::Service(judge::JudgeBuffer& buffer, Pipeline* pipeline, const PipelineConfig& cfg)
    : impl_(std::make_unique<Impl>(buffer, pipeline, cfg)) {
  auto& s = impl_->server;
  Impl* im = impl_.get();
  // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which
  // would let a second server share a busy port.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes),
               sizeof(yes));
  });
  s.Get("/api/queue", [im](const httplib::Request& req, httplib::Response& res) {
    reply(res, im->api.queue(req.get_param_value("task"), req.get_param_value("limit")));
  });
  s.Post("/api/verdict", [im](const httplib::Request& req, httplib::Response& res) {
    reply(res, im->api.verdict(req.body));
  });
  s.Get("/api/metrics", [im](const httplib::Request&, httplib::Response& res) {
    reply(res, im->api.metrics());
  });
  s.Get("/api/schemas", [im](const httplib::Request&, httplib::Response& res) {
    reply(res, im->api.schemas());
  });
  s.Post(R"(/api/run/([^/]+))", [im](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(im->run_mu);
    reply(res, im->api.run(req.matches[1]));
  });
  if (!cfg.console_dir.empty() && std::filesystem::is_directory(cfg.console_dir)) {
    s.set_mount_point("/", cfg.console_dir);
  }
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError(fmt::format("cannot bind {}:{}", host, port));
  return bound;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace tagrec::pipeline
