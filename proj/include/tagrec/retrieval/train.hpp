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

// Mini-batch SGD on the joint objective with uniform negative sampling.

#ifndef TAGREC_RETRIEVAL_TRAIN_HPP_
#define TAGREC_RETRIEVAL_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tagrec/common/random.hpp"
#include "tagrec/retrieval/dataset.hpp"
#include "tagrec/retrieval/loss.hpp"
#include "tagrec/retrieval/model.hpp"

namespace tagrec::retrieval {

struct TrainConfig {
  ModelConfig model;
  LossConfig loss;
  std::size_t batch_size = 32;
  std::size_t steps = 0;  // 0: loss.epochs passes over the positives
  std::size_t max_history = 50;
  std::size_t eval_examples = 256;
};

TriTowerModel build_model(const ModelConfig& cfg, const Dataset& ds);

// Builds batches for positives (interaction indices): the history strictly
// before each positive, the positive item's tag, and sampled contrast sets.
class BatchSampler {
 public:
  BatchSampler(const Dataset& ds, const TriTowerModel& model, const TrainConfig& cfg);

  TrainingBatch sample(const std::vector<std::size_t>& positives, Rng& rng) const;

 private:
  std::size_t pick_other(std::size_t exclude, Rng& rng) const;

  const Dataset& ds_;
  const TriTowerModel& model_;
  const TrainConfig& cfg_;
  std::vector<ItemRows> rows_;  // per catalog item
  std::vector<std::vector<std::size_t>> same_cat_;  // per catalog item
  std::vector<std::vector<std::size_t>> other_cat_;
};

// Plain SGD step on the batch-mean objective. Returns the batch-mean loss
// before the update.
double sgd_step(TriTowerModel& model, const TrainingBatch& batch, const LossConfig& cfg);

struct TrainResult {
  TriTowerModel model;
  std::vector<double> history;  // batch-mean loss per step
  double initial_loss = 0.0;    // mean loss on the fixed evaluation batch
  double final_loss = 0.0;
  std::size_t steps = 0;
  std::size_t positives = 0;
};

// Throws TrainingError on a non-finite loss and ValidationError on an
// empty dataset.
TrainResult train(const Dataset& ds, const TrainConfig& cfg);
// Continues from `model`, whose vocabularies must cover the dataset.
TrainResult train(TriTowerModel model, const Dataset& ds, const TrainConfig& cfg);

}  // namespace tagrec::retrieval

#endif  // TAGREC_RETRIEVAL_TRAIN_HPP_
