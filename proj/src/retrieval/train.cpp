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

#include "tagrec/retrieval/train.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"

namespace tagrec::retrieval {

TriTowerModel build_model(const ModelConfig& cfg, const Dataset& ds) {
  std::vector<ItemFeatures> items;
  items.reserve(ds.catalog.size());
  for (const auto& it : ds.catalog.items()) items.push_back(features_of(it));
  return build_model(cfg, items, ds.users, ds.tags());
}

BatchSampler::BatchSampler(const Dataset& ds, const TriTowerModel& model,
                           const TrainConfig& cfg)
    : ds_(ds), model_(model), cfg_(cfg) {
  const std::size_t n = ds.catalog.size();
  rows_.reserve(n);
  for (const auto& it : ds.catalog.items()) rows_.push_back(model.encode_item(features_of(it)));
  same_cat_.resize(n);
  other_cat_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& c = ds.catalog.at(i).category;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      (ds.catalog.at(j).category == c ? same_cat_[i] : other_cat_[i]).push_back(j);
    }
  }
}

std::size_t BatchSampler::pick_other(std::size_t exclude, Rng& rng) const {
  const std::size_t r = rng.uniform_index(ds_.catalog.size() - 1);
  return r >= exclude ? r + 1 : r;
}

TrainingBatch BatchSampler::sample(const std::vector<std::size_t>& positives,
                                   Rng& rng) const {
  if (ds_.catalog.size() < 2) throw ValidationError("catalog needs at least two items");
  TrainingBatch batch;
  std::unordered_map<std::size_t, std::size_t> slot;  // catalog index -> batch item
  auto ref = [&](std::size_t item) {
    auto [it, added] = slot.emplace(item, batch.items.size());
    if (added) batch.items.push_back(rows_[item]);
    return it->second;
  };
  const LossConfig& lc = cfg_.loss;
  for (std::size_t p : positives) {
    const Interaction& x = ds_.interactions.at(p);
    if (same_cat_[x.item].empty() || other_cat_[x.item].empty()) {
      throw ValidationError(fmt::format(
          "item '{}' needs another item in and out of its category",
          ds_.catalog.at(x.item).item_id));
    }
    Example ex;
    ex.user_row = model_.users.lookup(x.user_id);
    for (const auto& seq : ds_.history(x.user_id, x.ts, model_.cfg.behaviors,
                                       cfg_.max_history)) {
      auto& out = ex.sequences.emplace_back();
      for (std::size_t item : seq) out.push_back(ref(item));
    }
    ex.positive = ref(x.item);
    ex.tag_tokens = model_.encode_tag(ds_.catalog.at(x.item).tag);
    for (std::size_t k = 0; k < lc.k_neg; ++k) ex.negatives.push_back(ref(pick_other(x.item, rng)));
    const auto& same = same_cat_[x.item];
    const auto& other = other_cat_[x.item];
    for (std::size_t k = 0; k < lc.cate_pos; ++k) {
      ex.cate_pos.push_back(ref(same[rng.uniform_index(same.size())]));
    }
    for (std::size_t k = 0; k < lc.cate_neg; ++k) {
      ex.cate_neg.push_back(ref(other[rng.uniform_index(other.size())]));
    }
    batch.examples.push_back(std::move(ex));
  }
  return batch;
}

double sgd_step(TriTowerModel& model, const TrainingBatch& batch, const LossConfig& cfg) {
  if (batch.examples.empty()) return 0.0;
  TriTowerModel grad = model.zeros_like();
  const double inv = 1.0 / static_cast<double>(batch.examples.size());
  const LossParts parts = compute_losses(model, batch, cfg.alpha, &grad, inv);
  const double loss = parts.total(cfg.alpha) * inv;
  if (!std::isfinite(loss)) {
    throw TrainingError(fmt::format("non-finite loss (col {}, tag {}, cate {})", parts.col,
                                    parts.tag, parts.cate));
  }
  auto p = model.params();
  auto g = grad.params();
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].size; ++i) {
      p[t].data[i] -= cfg.learning_rate * g[t].data[i];
    }
  }
  return loss;
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
  return train(build_model(cfg.model, ds), ds, cfg);
}

TrainResult train(TriTowerModel model, const Dataset& ds, const TrainConfig& cfg) {
  if (ds.interactions.empty()) throw ValidationError("dataset has no interactions");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(cfg.loss.alpha >= 0.0 && cfg.loss.alpha <= 1.0)) {
    throw RangeError(fmt::format("alpha {} outside [0, 1]", cfg.loss.alpha));
  }
  if (cfg.loss.k_neg == 0 || cfg.loss.cate_pos == 0 || cfg.loss.cate_neg == 0) {
    throw ConfigError("k_neg, cate_pos and cate_neg must be positive");
  }
  TrainResult out;
  out.model = std::move(model);
  out.positives = ds.interactions.size();
  const BatchSampler sampler(ds, out.model, cfg);

  Rng rng(mix_seed(cfg.loss.seed, "train"));
  std::vector<std::size_t> order(ds.interactions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  // A fixed evaluation batch drawn before training.
  Rng eval_rng(mix_seed(cfg.loss.seed, "eval"));
  std::vector<std::size_t> eval_pos = order;
  eval_rng.shuffle(eval_pos);
  eval_pos.resize(std::min(cfg.eval_examples, eval_pos.size()));
  const TrainingBatch eval_batch = sampler.sample(eval_pos, eval_rng);
  auto eval = [&] {
    if (eval_batch.examples.empty()) return 0.0;
    return compute_losses(out.model, eval_batch, cfg.loss.alpha).total(cfg.loss.alpha) /
           static_cast<double>(eval_batch.examples.size());
  };
  out.initial_loss = eval();

  const std::size_t per_epoch = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t steps = cfg.steps ? cfg.steps : per_epoch * cfg.loss.epochs;
  std::size_t cursor = order.size();
  std::vector<std::size_t> chosen;
  for (std::size_t step = 0; step < steps; ++step) {
    chosen.clear();
    while (chosen.size() < cfg.batch_size) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      chosen.push_back(order[cursor++]);
      if (cursor == order.size() && chosen.size() >= order.size()) break;
    }
    const TrainingBatch batch = sampler.sample(chosen, rng);
    try {
      out.history.push_back(sgd_step(out.model, batch, cfg.loss));
    } catch (const TrainingError& e) {
      throw TrainingError(fmt::format("step {}: {}", step, e.what()));
    }
  }
  out.steps = steps;
  out.final_loss = eval();
  if (!std::isfinite(out.final_loss)) throw TrainingError("non-finite evaluation loss");
  return out;
}

}  // namespace tagrec::retrieval
