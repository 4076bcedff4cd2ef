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

// The judge data buffer: generated samples with their human and LLM
// verdicts, kept as an append-only JSONL operation log.

#ifndef TAGREC_JUDGE_BUFFER_HPP_
#define TAGREC_JUDGE_BUFFER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagrec/common/time.hpp"
#include "tagrec/judge/judge.hpp"
#include "tagrec/judge/verdict.hpp"

namespace tagrec::judge {

struct JudgeSample {
  std::string sample_id;
  Task task = Task::kInterestMining;
  nlohmann::json payload = nlohmann::json::object();
  int round = 0;
  Timestamp created_at = 0;
  std::optional<QualityVerdict> human;  // latest human verdict
  std::optional<QualityVerdict> llm;    // latest LLM verdict

  bool operator==(const JudgeSample&) const = default;
};

nlohmann::json to_json(const JudgeSample& s);
JudgeSample sample_from_json(const nlohmann::json& j);

class JudgeBuffer {
 public:
  // In-memory only.
  JudgeBuffer() = default;
  // Replays (creating if needed) the log at `path`; later appends go to it.
  explicit JudgeBuffer(std::filesystem::path path);
  JudgeBuffer(const JudgeBuffer&) = delete;
  JudgeBuffer& operator=(const JudgeBuffer&) = delete;

  // Throws ValidationError for a duplicate id, a negative round or a
  // task without schemas.
  void enqueue(JudgeSample sample);
  void enqueue_for_human(const std::vector<JudgeSample>& samples);

  // Throw NotFoundError for an unknown id and ValidationError for a
  // verdict that does not fit the task's schemas.
  void record_human_verdict(const std::string& sample_id, const Criteria& criteria);
  void record_llm_verdict(const std::string& sample_id, const Criteria& criteria);

  // Runs `provider` on the sample and records the result. Returns false,
  // leaving the sample for humans, when the provider had no verdict.
  bool judge_with(const std::string& sample_id, VerdictProvider& provider);

  std::optional<JudgeSample> get(const std::string& sample_id) const;
  std::vector<QualityVerdict> human_history(const std::string& sample_id) const;
  // Samples without a human verdict, oldest first (created_at, then
  // insertion order). limit 0 means all.
  std::vector<JudgeSample> pending(std::optional<Task> task = std::nullopt,
                                   std::size_t limit = 0) const;
  // Every sample in insertion order.
  std::vector<JudgeSample> samples() const;
  std::size_t size() const;
  // Number of operations ever appended.
  std::size_t log_length() const;

 private:
  struct Entry {
    JudgeSample sample;
    std::vector<QualityVerdict> human_history;
    std::size_t seq = 0;
  };

  void apply(const nlohmann::json& op, bool persist);

  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Entry> entries_;
  std::size_t ops_ = 0;
};

struct RebalanceConfig {
  // Majority : minority kept per task.
  double ratio = 1.0;
  // Recency weight of a majority sample is 2^(-age / half_life) with age
  // counted in rounds behind the newest round.
  double half_life = 1.0;
  std::uint64_t seed = 0;
};

struct RebalanceTaskReport {
  Task task = Task::kInterestMining;
  std::size_t pass_in = 0;
  std::size_t fail_in = 0;
  std::size_t pass_out = 0;
  std::size_t fail_out = 0;
  std::optional<bool> minority_is_pass;  // nullopt when already balanced
};

struct RebalanceResult {
  std::vector<JudgeSample> samples;
  std::vector<RebalanceTaskReport> tasks;
  std::vector<std::string> warnings;
};

// Per task, over human-labeled samples: the minority pass/fail class is
// kept whole across every round; the majority class is sampled without
// replacement, weighted toward recent rounds, down to ratio * minority.
// A task with an empty class is exported as is, with a warning.
RebalanceResult rebalance(const std::vector<JudgeSample>& samples,
                          const RebalanceConfig& cfg = {});

// Weighted sampling without replacement (one exponential key per item);
// returns the chosen indices in descending key order.
std::vector<std::size_t> weighted_sample(const std::vector<double>& weights,
                                         std::size_t k, std::uint64_t seed);

// SFT-style records for judge fine-tuning: prompt, response.
std::vector<nlohmann::json> export_judge_training(
    const std::vector<JudgeSample>& samples);

}  // namespace tagrec::judge

#endif  // TAGREC_JUDGE_BUFFER_HPP_
