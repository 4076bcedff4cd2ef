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

#include "tagrec/pipeline/config.hpp"

#include <charconv>
#include <functional>
#include <system_error>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/text.hpp"

namespace tagrec::pipeline {

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, v));
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field field(const char* key, T PipelineConfig::*member) {
  Field f;
  f.key = key;
  f.set = [member, key](PipelineConfig& c, std::string_view v) {
    if constexpr (std::is_same_v<T, std::string>) {
      c.*member = std::string(v);
    } else {
      c.*member = parse_number<T>(key, v);
    }
  };
  f.get = [member](const PipelineConfig& c) {
    if constexpr (std::is_same_v<T, std::string>) {
      return c.*member;
    } else {
      return fmt::format("{}", c.*member);
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      field("data_dir", &PipelineConfig::data_dir),
      field("work_dir", &PipelineConfig::work_dir),
      field("provider", &PipelineConfig::provider),
      field("llm_endpoint", &PipelineConfig::llm_endpoint),
      field("llm_model", &PipelineConfig::llm_model),
      field("judge", &PipelineConfig::judge),
      field("seed", &PipelineConfig::seed),
      field("now", &PipelineConfig::now),
      field("token_budget", &PipelineConfig::token_budget),
      field("pool_size", &PipelineConfig::pool_size),
      field("min_interests", &PipelineConfig::min_interests),
      field("tag_count", &PipelineConfig::tag_count),
      field("min_tags", &PipelineConfig::min_tags),
      field("top_k", &PipelineConfig::top_k),
      field("alpha", &PipelineConfig::alpha),
      field("beta", &PipelineConfig::beta),
      field("k_neg", &PipelineConfig::k_neg),
      field("emb_dim", &PipelineConfig::emb_dim),
      field("out_dim", &PipelineConfig::out_dim),
      field("train_steps", &PipelineConfig::train_steps),
      field("batch_size", &PipelineConfig::batch_size),
      field("learning_rate", &PipelineConfig::learning_rate),
      field("per_user_cap", &PipelineConfig::per_user_cap),
      field("per_cate_cap", &PipelineConfig::per_cate_cap),
      field("window_days", &PipelineConfig::window_days),
      field("hr_k", &PipelineConfig::hr_k),
      field("judge_delta", &PipelineConfig::judge_delta),
      field("judge_gate", &PipelineConfig::judge_gate),
      field("bind", &PipelineConfig::bind),
      field("console_dir", &PipelineConfig::console_dir),
  };
  return f;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.emplace_back(f.key);
    return k;
  }();
  return keys;
}

void set_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

void apply_override(PipelineConfig& cfg, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(fmt::format("override '{}' is not key=value", assignment));
  }
  set_value(cfg, text::trim(assignment.substr(0, eq)), text::trim(assignment.substr(eq + 1)));
}

PipelineConfig parse_config(std::string_view body) {
  PipelineConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    const std::string_view line = text::trim(body.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    try {
      apply_override(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return cfg;
}

std::string format_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(cfg));
  return out;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path));
}

void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  io::write_file_atomic(path, format_config(cfg));
}

void validate(const PipelineConfig& cfg) {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(fmt::format("{}: {}", key, what));
  };
  require(cfg.provider == "stub" || cfg.provider == "http", "provider", "must be stub or http");
  require(cfg.judge == "rule" || cfg.judge == "llm", "judge", "must be rule or llm");
  require(cfg.provider != "http" || !cfg.llm_endpoint.empty(), "llm_endpoint",
          "required for the http provider");
  require(!cfg.data_dir.empty(), "data_dir", "required");
  require(!cfg.work_dir.empty(), "work_dir", "required");
  require(cfg.token_budget > 0, "token_budget", "must be positive");
  require(cfg.pool_size > 0, "pool_size", "must be positive");
  require(cfg.tag_count > 0, "tag_count", "must be positive");
  require(cfg.top_k > 0, "top_k", "must be positive");
  require(cfg.k_neg > 0, "k_neg", "must be positive");
  require(cfg.emb_dim > 0 && cfg.out_dim > 0, "emb_dim", "dims must be positive");
  require(cfg.batch_size > 0, "batch_size", "must be positive");
  require(cfg.per_user_cap > 0 && cfg.per_cate_cap > 0, "per_user_cap", "caps must be positive");
  require(cfg.window_days > 0, "window_days", "must be positive");
  require(cfg.hr_k > 0, "hr_k", "must be positive");
  require(cfg.learning_rate > 0, "learning_rate", "must be positive");
  require(cfg.bind.find(':') != std::string::npos, "bind", "must be host:port");
  auto unit = [](double v, const char* key) {
    if (!(v >= 0.0 && v <= 1.0)) throw RangeError(fmt::format("{}: {} outside [0, 1]", key, v));
  };
  unit(cfg.alpha, "alpha");
  unit(cfg.beta, "beta");
  unit(cfg.judge_delta, "judge_delta");
  unit(cfg.judge_gate, "judge_gate");
}

}  // namespace tagrec::pipeline
