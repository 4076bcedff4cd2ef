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

#include "tagrec/judge/buffer.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/random.hpp"

namespace tagrec::judge {

using nlohmann::json;

json to_json(const JudgeSample& s) {
  json j = {{"sample_id", s.sample_id},
            {"task", llm::to_string(s.task)},
            {"payload", s.payload},
            {"round", s.round},
            {"created_at", s.created_at}};
  if (s.human) j["human"] = to_json(*s.human);
  if (s.llm) j["llm"] = to_json(*s.llm);
  return j;
}

JudgeSample sample_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("sample: expected an object");
  JudgeSample s;
  if (!j.contains("sample_id") || !j.at("sample_id").is_string() ||
      j.at("sample_id").get<std::string>().empty()) {
    throw ValidationError("sample_id: required non-empty string");
  }
  s.sample_id = j.at("sample_id").get<std::string>();
  auto task = j.contains("task") && j.at("task").is_string()
                  ? llm::parse_task(j.at("task").get<std::string>())
                  : std::nullopt;
  if (!task) throw ValidationError("task: unknown or missing");
  s.task = *task;
  schemas(s.task);
  if (j.contains("payload")) s.payload = j.at("payload");
  if (j.contains("round")) {
    if (!j.at("round").is_number_integer()) throw ValidationError("round: expected integer");
    s.round = j.at("round").get<int>();
  }
  if (j.contains("created_at")) s.created_at = j.at("created_at").get<Timestamp>();
  if (j.contains("human")) s.human = verdict_from_json(s.task, j.at("human"));
  if (j.contains("llm")) s.llm = verdict_from_json(s.task, j.at("llm"));
  return s;
}

JudgeBuffer::JudgeBuffer(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    io::write_file_atomic(*path_, "");
    return;
  }
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(*path_)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      apply(json::parse(line), false);
    } catch (const std::exception& e) {
      throw ParseError(fmt::format("{}:{}: {}", path_->string(), line_no, e.what()),
                       line);
    }
  }
}

// Operations:
//   {"op":"enqueue","sample":{...}}
//   {"op":"human","sample_id":...,"criteria":{...}}
//   {"op":"llm","sample_id":...,"criteria":{...}}
void JudgeBuffer::apply(const json& op, bool persist) {
  const std::string kind = op.at("op").get<std::string>();
  if (kind == "enqueue") {
    JudgeSample s = sample_from_json(op.at("sample"));
    if (s.round < 0) throw ValidationError("round: must be >= 0");
    if (entries_.count(s.sample_id)) {
      throw ValidationError(fmt::format("sample_id '{}' already enqueued", s.sample_id));
    }
    Entry e;
    if (s.human) e.human_history.push_back(*s.human);
    e.seq = entries_.size();
    e.sample = std::move(s);
    const std::string id = e.sample.sample_id;
    entries_.emplace(id, std::move(e));
  } else if (kind == "human" || kind == "llm") {
    const std::string id = op.at("sample_id").get<std::string>();
    auto it = entries_.find(id);
    if (it == entries_.end()) throw NotFoundError(fmt::format("unknown sample_id '{}'", id));
    QualityVerdict v = verdict_from_json(it->second.sample.task, op.at("criteria"));
    if (kind == "human") {
      it->second.human_history.push_back(v);
      it->second.sample.human = std::move(v);
    } else {
      it->second.sample.llm = std::move(v);
    }
  } else {
    throw ValidationError(fmt::format("unknown buffer op '{}'", kind));
  }
  ++ops_;
  if (persist && path_) io::append_line(*path_, op.dump());
}

void JudgeBuffer::enqueue(JudgeSample sample) {
  std::unique_lock lock(mu_);
  apply(json{{"op", "enqueue"}, {"sample", to_json(sample)}}, true);
}

void JudgeBuffer::enqueue_for_human(const std::vector<JudgeSample>& samples) {
  for (const auto& s : samples) enqueue(s);
}

void JudgeBuffer::record_human_verdict(const std::string& sample_id,
                                       const Criteria& criteria) {
  std::unique_lock lock(mu_);
  json c = json::object();
  for (const auto& [k, v] : criteria) c[k] = v;
  apply(json{{"op", "human"}, {"sample_id", sample_id}, {"criteria", c}}, true);
}

void JudgeBuffer::record_llm_verdict(const std::string& sample_id,
                                     const Criteria& criteria) {
  std::unique_lock lock(mu_);
  json c = json::object();
  for (const auto& [k, v] : criteria) c[k] = v;
  apply(json{{"op", "llm"}, {"sample_id", sample_id}, {"criteria", c}}, true);
}

bool JudgeBuffer::judge_with(const std::string& sample_id, VerdictProvider& provider) {
  auto s = get(sample_id);
  if (!s) throw NotFoundError(fmt::format("unknown sample_id '{}'", sample_id));
  auto v = judge_payload(s->task, s->payload, provider);
  if (!v) return false;
  record_llm_verdict(sample_id, v->criteria);
  return true;
}

std::optional<JudgeSample> JudgeBuffer::get(const std::string& sample_id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(sample_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.sample;
}

std::vector<QualityVerdict> JudgeBuffer::human_history(
    const std::string& sample_id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(sample_id);
  if (it == entries_.end()) throw NotFoundError(fmt::format("unknown sample_id '{}'", sample_id));
  return it->second.human_history;
}

std::vector<JudgeSample> JudgeBuffer::samples() const {
  std::shared_lock lock(mu_);
  std::vector<const Entry*> order;
  for (const auto& [id, e] : entries_) order.push_back(&e);
  std::sort(order.begin(), order.end(),
            [](const Entry* a, const Entry* b) { return a->seq < b->seq; });
  std::vector<JudgeSample> out;
  for (const Entry* e : order) out.push_back(e->sample);
  return out;
}

std::vector<JudgeSample> JudgeBuffer::pending(std::optional<Task> task,
                                              std::size_t limit) const {
  std::vector<JudgeSample> all = samples();
  std::vector<JudgeSample> out;
  for (auto& s : all) {
    if (s.human || (task && s.task != *task)) continue;
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const JudgeSample& a, const JudgeSample& b) {
    return a.created_at < b.created_at;
  });
  if (limit > 0 && out.size() > limit) out.resize(limit);
  return out;
}

std::size_t JudgeBuffer::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::size_t JudgeBuffer::log_length() const {
  std::shared_lock lock(mu_);
  return ops_;
}

std::vector<std::size_t> weighted_sample(const std::vector<double>& weights,
                                         std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) throw ValidationError("weights must be positive");
    double u;
    do {
      u = rng.uniform01();
    } while (u <= 0.0);
    // log(u^(1/w)) ranks identically to u^(1/w) without underflow.
    keys.emplace_back(std::log(u) / weights[i], i);
  }
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, keys.size()); ++i) out.push_back(keys[i].second);
  return out;
}

RebalanceResult rebalance(const std::vector<JudgeSample>& samples,
                          const RebalanceConfig& cfg) {
  if (!(cfg.ratio > 0.0)) throw ValidationError("ratio must be positive");
  if (!(cfg.half_life > 0.0)) throw ValidationError("half_life must be positive");
  RebalanceResult result;
  for (Task task : judged_tasks()) {
    std::vector<std::size_t> pass;
    std::vector<std::size_t> fail;
    int newest = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (s.task != task || !s.human) continue;
      (s.human->pass ? pass : fail).push_back(i);
      newest = std::max(newest, s.round);
    }
    if (pass.empty() && fail.empty()) continue;
    RebalanceTaskReport rep;
    rep.task = task;
    rep.pass_in = pass.size();
    rep.fail_in = fail.size();
    std::vector<std::size_t> keep;
    if (pass.empty() || fail.empty()) {
      result.warnings.push_back(fmt::format(
          "{}: no {} samples; exported unbalanced", llm::to_string(task),
          pass.empty() ? "passing" : "failing"));
      keep = pass.empty() ? fail : pass;
    } else if (pass.size() == fail.size()) {
      keep = pass;
      keep.insert(keep.end(), fail.begin(), fail.end());
    } else {
      const bool minority_pass = pass.size() < fail.size();
      rep.minority_is_pass = minority_pass;
      const auto& minority = minority_pass ? pass : fail;
      const auto& majority = minority_pass ? fail : pass;
      const auto target = std::min<std::size_t>(
          majority.size(),
          static_cast<std::size_t>(std::llround(cfg.ratio * static_cast<double>(minority.size()))));
      std::vector<double> w;
      for (std::size_t i : majority) {
        const double age = newest - samples[i].round;
        w.push_back(std::exp2(-age / cfg.half_life));
      }
      keep = minority;
      for (std::size_t j :
           weighted_sample(w, target, mix_seed(cfg.seed, llm::to_string(task)))) {
        keep.push_back(majority[j]);
      }
    }
    std::sort(keep.begin(), keep.end());
    for (std::size_t i : keep) {
      (samples[i].human->pass ? rep.pass_out : rep.fail_out)++;
      result.samples.push_back(samples[i]);
    }
    result.tasks.push_back(rep);
  }
  return result;
}

std::vector<json> export_judge_training(const std::vector<JudgeSample>& samples) {
  std::vector<json> out;
  const auto& tmpl = llm::default_template(Task::kJudge);
  for (const auto& s : samples) {
    if (!s.human) continue;
    json criteria = json::object();
    for (const auto& [k, v] : s.human->criteria) criteria[k] = v;
    out.push_back({{"sample_id", s.sample_id},
                   {"task", llm::to_string(s.task)},
                   {"prompt", tmpl.instantiate(judge_bindings(s.task, s.payload))},
                   {"response", criteria.dump()}});
  }
  return out;
}

}  // namespace tagrec::judge
