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

// Pipeline configuration: one key = value file with CLI overrides.

#ifndef TAGREC_PIPELINE_CONFIG_HPP_
#define TAGREC_PIPELINE_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tagrec/common/time.hpp"

namespace tagrec::pipeline {

struct PipelineConfig {
  std::string data_dir = "data";
  std::string work_dir = "work";
  std::string provider = "stub";  // stub | http
  std::string llm_endpoint;
  std::string llm_model = "default";
  std::string judge = "rule";  // rule | llm
  std::uint64_t seed = 7;
  Timestamp now = 0;  // 0: the day after the latest event
  std::size_t token_budget = 128000;
  std::size_t pool_size = 20;
  std::size_t min_interests = 10;
  std::size_t tag_count = 50;
  std::size_t min_tags = 50;
  std::size_t top_k = 10;
  double alpha = 0.5;
  double beta = 0.5;
  std::size_t k_neg = 8;
  std::size_t emb_dim = 16;
  std::size_t out_dim = 32;
  std::size_t train_steps = 200;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::size_t per_user_cap = 80;
  std::size_t per_cate_cap = 2;
  int window_days = 14;
  std::size_t hr_k = 30;
  double judge_delta = 0.05;
  double judge_gate = 0.90;
  std::string bind = "127.0.0.1:8080";
  std::string console_dir;

  bool operator==(const PipelineConfig&) const = default;
};

// Every key in file order, for documentation and round-trips.
const std::vector<std::string>& config_keys();

// Grammar: one `key = value` per line; leading/trailing blanks trimmed;
// blank lines and lines starting with '#' ignored; values run to the end
// of the line. Unknown keys and malformed values throw ConfigError with
// the line number.
PipelineConfig parse_config(std::string_view text);
std::string format_config(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& cfg, const std::filesystem::path& path);

// Applies one "key=value" override.
void apply_override(PipelineConfig& cfg, std::string_view assignment);
void set_value(PipelineConfig& cfg, std::string_view key, std::string_view value);

// Range checks; throws ConfigError or RangeError naming the key.
void validate(const PipelineConfig& cfg);

}  // namespace tagrec::pipeline

#endif  // TAGREC_PIPELINE_CONFIG_HPP_
