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

// Contrastive objectives of the tri-tower model and their analytic
// gradients.

#ifndef TAGREC_RETRIEVAL_LOSS_HPP_
#define TAGREC_RETRIEVAL_LOSS_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tagrec/retrieval/model.hpp"

namespace tagrec::retrieval {

// One positive (user, item, tag) with its sampled contrast sets. Item
// references index TrainingBatch::items.
struct Example {
  std::size_t user_row = 0;
  std::vector<std::vector<std::size_t>> sequences;  // per behavior slot
  std::size_t positive = 0;
  std::vector<std::size_t> tag_tokens;  // token rows
  std::vector<std::size_t> negatives;   // sampled items for the user and the tag
  std::vector<std::size_t> cate_pos;    // same category as the positive
  std::vector<std::size_t> cate_neg;    // other categories
};

struct TrainingBatch {
  std::vector<ItemRows> items;
  std::vector<Example> examples;
};

struct LossConfig {
  double alpha = 0.5;  // [0, 1]
  std::size_t k_neg = 8;
  std::size_t cate_pos = 2;
  std::size_t cate_neg = 4;
  double learning_rate = 0.05;
  std::size_t epochs = 1;
  std::uint64_t seed = 7;
};

struct LossParts {
  double col = 0.0;
  double tag = 0.0;
  double cate = 0.0;

  // col + alpha * tag + (1 - alpha) * cate
  double total(double alpha) const;
};

// -log softmax(logits)[0] with the maximum subtracted first.
double softmax_nll(const std::vector<double>& logits);

// Summed losses over the batch. With `grad` set, adds
// grad_scale * d(total(alpha))/d(params) into it; with `relu_mask` set,
// appends the sign of every relu pre-activation visited. Throws
// ValidationError when an example lacks negatives or category samples.
LossParts compute_losses(const TriTowerModel& model, const TrainingBatch& batch,
                         double alpha, TriTowerModel* grad = nullptr,
                         double grad_scale = 1.0, std::vector<bool>* relu_mask = nullptr);

double loss_col(const TrainingBatch& batch, const TriTowerModel& model);
double loss_tag(const TrainingBatch& batch, const TriTowerModel& model);
double loss_cate(const TrainingBatch& batch, const TriTowerModel& model);
double loss_total(const TrainingBatch& batch, const TriTowerModel& model,
                  const LossConfig& cfg);

}  // namespace tagrec::retrieval

#endif  // TAGREC_RETRIEVAL_LOSS_HPP_
