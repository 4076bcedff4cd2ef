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

// Agreement between LLM and human verdicts, drift detection and the
// deployment gate.

#ifndef TAGREC_JUDGE_METRICS_HPP_
#define TAGREC_JUDGE_METRICS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagrec/judge/buffer.hpp"

namespace tagrec::judge {

// Positive class = human pass.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

// A metric whose denominator is zero is nullopt, never 0.
struct Agreement {
  Confusion cm;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

Agreement metrics_from(const Confusion& cm);

struct TaskAgreement {
  Agreement pass;
  // Fraction of samples where both sides chose the same label.
  std::map<std::string, std::optional<double>> per_criterion;
};

// Over samples carrying both verdicts, grouped by task.
std::map<Task, TaskAgreement> agreement(const std::vector<JudgeSample>& samples);

struct DriftConfig {
  double delta = 0.05;
  std::size_t min_window = 30;
};

struct DriftReport {
  bool retrain_required = false;
  bool low_confidence = false;
  std::optional<double> baseline_accuracy;
  std::optional<double> window_accuracy;
  double delta = 0.05;
  std::size_t window_size = 0;
};

// retrain_required iff baseline - window > delta. Throws ValidationError
// for an empty window.
DriftReport drift_check(const Agreement& window, std::optional<double> baseline_accuracy,
                        const DriftConfig& cfg = {});

// The newest round of doubly labeled samples against every earlier round.
DriftReport drift_by_round(const std::vector<JudgeSample>& samples, Task task,
                           const DriftConfig& cfg = {});

inline constexpr double kDefaultDeploymentGate = 0.90;

bool deployment_gate(const Agreement& heldout, double threshold = kDefaultDeploymentGate);

nlohmann::json to_json(const Agreement& a);
nlohmann::json to_json(const DriftReport& d);

// Per-task agreement, per-criterion agreement and drift, as served by
// the metrics endpoint.
nlohmann::json metrics_report(const std::vector<JudgeSample>& samples,
                              const DriftConfig& cfg = {},
                              double gate = kDefaultDeploymentGate);

}  // namespace tagrec::judge

#endif  // TAGREC_JUDGE_METRICS_HPP_
