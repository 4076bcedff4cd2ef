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

#include "tagrec/judge/metrics.hpp"

#include <algorithm>

#include "tagrec/common/error.hpp"

namespace tagrec::judge {

using nlohmann::json;

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Confusion confusion(const std::vector<const JudgeSample*>& v) {
  Confusion cm;
  for (const JudgeSample* s : v) {
    const bool h = s->human->pass;
    const bool l = s->llm->pass;
    if (h && l) ++cm.tp;
    else if (!h && l) ++cm.fp;
    else if (h && !l) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

std::vector<const JudgeSample*> doubly(const std::vector<JudgeSample>& samples,
                                       Task task) {
  std::vector<const JudgeSample*> out;
  for (const auto& s : samples) {
    if (s.task == task && s.human && s.llm) out.push_back(&s);
  }
  return out;
}

}  // namespace

Agreement metrics_from(const Confusion& cm) {
  Agreement a;
  a.cm = cm;
  a.accuracy = ratio(cm.tp + cm.tn, cm.total());
  a.precision = ratio(cm.tp, cm.tp + cm.fp);
  a.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (a.precision && a.recall && *a.precision + *a.recall > 0.0) {
    a.f1 = 2.0 * *a.precision * *a.recall / (*a.precision + *a.recall);
  }
  return a;
}

std::map<Task, TaskAgreement> agreement(const std::vector<JudgeSample>& samples) {
  std::map<Task, TaskAgreement> out;
  for (Task task : judged_tasks()) {
    const auto both = doubly(samples, task);
    if (both.empty()) continue;
    TaskAgreement ta;
    ta.pass = metrics_from(confusion(both));
    for (const auto& sch : schemas(task)) {
      std::size_t same = 0;
      std::size_t n = 0;
      for (const JudgeSample* s : both) {
        auto h = s->human->criteria.find(sch.name);
        auto l = s->llm->criteria.find(sch.name);
        if (h == s->human->criteria.end() || l == s->llm->criteria.end()) continue;
        ++n;
        if (h->second == l->second) ++same;
      }
      ta.per_criterion[sch.name] = ratio(same, n);
    }
    out.emplace(task, std::move(ta));
  }
  return out;
}

DriftReport drift_check(const Agreement& window, std::optional<double> baseline_accuracy,
                        const DriftConfig& cfg) {
  if (window.cm.total() == 0) throw ValidationError("drift window is empty");
  DriftReport r;
  r.delta = cfg.delta;
  r.window_size = window.cm.total();
  r.window_accuracy = window.accuracy;
  r.baseline_accuracy = baseline_accuracy;
  r.low_confidence = r.window_size < cfg.min_window;
  // The slack keeps a drop of exactly delta from tripping on rounding.
  r.retrain_required =
      baseline_accuracy && *baseline_accuracy - *window.accuracy > cfg.delta + 1e-12;
  return r;
}

DriftReport drift_by_round(const std::vector<JudgeSample>& samples, Task task,
                           const DriftConfig& cfg) {
  const auto both = doubly(samples, task);
  if (both.empty()) throw ValidationError("no doubly labeled samples");
  int newest = 0;
  for (const JudgeSample* s : both) newest = std::max(newest, s->round);
  std::vector<const JudgeSample*> window;
  std::vector<const JudgeSample*> base;
  for (const JudgeSample* s : both) (s->round == newest ? window : base).push_back(s);
  const Agreement w = metrics_from(confusion(window));
  std::optional<double> b;
  if (!base.empty()) b = metrics_from(confusion(base)).accuracy;
  return drift_check(w, b, cfg);
}

bool deployment_gate(const Agreement& heldout, double threshold) {
  return heldout.accuracy && *heldout.accuracy >= threshold;
}

json to_json(const Agreement& a) {
  return {{"n", a.cm.total()},
          {"tp", a.cm.tp},
          {"fp", a.cm.fp},
          {"fn", a.cm.fn},
          {"tn", a.cm.tn},
          {"accuracy", opt(a.accuracy)},
          {"precision", opt(a.precision)},
          {"recall", opt(a.recall)},
          {"f1", opt(a.f1)}};
}

json to_json(const DriftReport& d) {
  return {{"status", d.retrain_required ? "retrain_required" : "ok"},
          {"low_confidence", d.low_confidence},
          {"baseline_accuracy", opt(d.baseline_accuracy)},
          {"window_accuracy", opt(d.window_accuracy)},
          {"delta", d.delta},
          {"window_size", d.window_size}};
}

json metrics_report(const std::vector<JudgeSample>& samples, const DriftConfig& cfg,
                    double gate) {
  json tasks = json::object();
  const auto agr = agreement(samples);
  for (Task task : judged_tasks()) {
    std::size_t labeled = 0;
    std::size_t pending = 0;
    for (const auto& s : samples) {
      if (s.task != task) continue;
      (s.human ? labeled : pending)++;
    }
    json t = {{"samples", labeled + pending}, {"human_labeled", labeled}, {"pending", pending}};
    auto it = agr.find(task);
    if (it != agr.end()) {
      t["agreement"] = to_json(it->second.pass);
      json pc = json::object();
      for (const auto& [name, v] : it->second.per_criterion) pc[name] = opt(v);
      t["per_criterion"] = pc;
      t["drift"] = to_json(drift_by_round(samples, task, cfg));
      t["deployable"] = deployment_gate(it->second.pass, gate);
    } else {
      t["agreement"] = nullptr;
      t["drift"] = nullptr;
      t["deployable"] = false;
    }
    tasks[std::string(llm::to_string(task))] = t;
  }
  return {{"tasks", tasks}, {"delta", cfg.delta}, {"gate", gate}};
}

}  // namespace tagrec::judge
