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

// JSON-over-HTTP service for the annotation console and pipeline runs.

#ifndef TAGREC_PIPELINE_SERVICE_HPP_
#define TAGREC_PIPELINE_SERVICE_HPP_

#include <memory>
#include <string>
#include <utility>

#include <json.hpp>

#include "tagrec/judge/buffer.hpp"
#include "tagrec/judge/metrics.hpp"
#include "tagrec/pipeline/pipeline.hpp"

namespace tagrec::pipeline {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Transport-free handlers, so the routing logic is testable without a
// socket. `pipeline` may be null, in which case /api/run answers 503.
class Api {
 public:
  Api(judge::JudgeBuffer& buffer, Pipeline* pipeline, judge::DriftConfig drift = {},
      double gate = judge::kDefaultDeploymentGate);

  // GET /api/queue?task=&limit=: pending samples, each with its schemas.
  ApiResponse queue(const std::string& task, const std::string& limit) const;
  // POST /api/verdict {sample_id, criteria}.
  ApiResponse verdict(const std::string& body);
  ApiResponse metrics() const;
  ApiResponse schemas() const;
  ApiResponse run(const std::string& user_id);

 private:
  judge::JudgeBuffer& buffer_;
  Pipeline* pipeline_;
  judge::DriftConfig drift_;
  double gate_;
};

// {"error": {"kind", "message", "field"?}}; the field is the message's
// leading "name:" when present.
nlohmann::json error_body(const std::string& kind, const std::string& message);

class Service {
 public:
  Service(judge::JudgeBuffer& buffer, Pipeline* pipeline, const PipelineConfig& cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds host:port; port 0 picks a free one. Returns the bound port and
  // throws IoError when binding fails.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// "host:port" -> (host, port). Throws ConfigError.
std::pair<std::string, int> parse_bind(const std::string& bind);

}  // namespace tagrec::pipeline

#endif  // TAGREC_PIPELINE_SERVICE_HPP_
