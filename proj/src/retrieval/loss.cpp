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

#include "tagrec/retrieval/loss.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"

namespace tagrec::retrieval {

namespace {

struct ItemState {
  Tower::Cache cache;
  Vec h;
  Vec dh;
};

void axpy(Vec& y, double a, const Vec& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// Adds the gradient of an item-input slice into the item tables.
void scatter_item(TriTowerModel& grad, const ItemRows& rows, const double* dx,
                  double scale) {
  std::size_t off = 0;
  for (std::size_t t = 0; t < grad.item_tables.size(); ++t) {
    Embedding& table = grad.item_tables[t];
    double* row = table.row(rows[t]);
    for (std::size_t k = 0; k < table.dim; ++k) row[k] += scale * dx[off + k];
    off += table.dim;
  }
}

// One softmax cross-entropy term with the positive at index 0. Returns the
// loss and accumulates d(scale * loss) into the anchor and candidate
// gradients.
double contrast(const Vec& anchor, const std::vector<const Vec*>& cands, double scale,
                Vec* d_anchor, const std::vector<Vec*>& d_cands) {
  std::vector<double> z(cands.size());
  for (std::size_t j = 0; j < cands.size(); ++j) z[j] = score(anchor, *cands[j]);
  const double loss = softmax_nll(z);
  if (d_anchor) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const double g = scale * (std::exp(z[j] - m) / sum - (j == 0 ? 1.0 : 0.0));
      axpy(*d_anchor, g, *cands[j]);
      axpy(*d_cands[j], g, anchor);
    }
  }
  return loss;
}

}  // namespace

double LossParts::total(double alpha) const {
  return col + alpha * tag + (1.0 - alpha) * cate;
}

double softmax_nll(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  return std::log(sum) + m - logits[0];
}

LossParts compute_losses(const TriTowerModel& model, const TrainingBatch& batch,
                         double alpha, TriTowerModel* grad, double grad_scale,
                         std::vector<bool>* relu_mask) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw RangeError(fmt::format("alpha {} outside [0, 1]", alpha));
  }
  const std::size_t d = model.cfg.out_dim;
  std::vector<std::optional<ItemState>> items(batch.items.size());
  auto item = [&](std::size_t i) -> ItemState& {
    if (i >= items.size()) throw ValidationError("item reference out of range");
    if (!items[i]) {
      ItemState s;
      s.h = model.item_tower.forward(model.item_input(batch.items[i]), s.cache);
      s.dh.assign(d, 0.0);
      items[i] = std::move(s);
    }
    return *items[i];
  };

  LossParts parts;
  for (std::size_t e = 0; e < batch.examples.size(); ++e) {
    const Example& ex = batch.examples[e];
    if (ex.negatives.empty()) {
      throw ValidationError(fmt::format("example {} has no negatives", e));
    }
    if (ex.cate_pos.empty() || ex.cate_neg.empty()) {
      throw ValidationError(fmt::format("example {} lacks category samples", e));
    }
    std::vector<std::vector<const ItemRows*>> seq(ex.sequences.size());
    for (std::size_t s = 0; s < ex.sequences.size(); ++s) {
      for (std::size_t i : ex.sequences[s]) seq[s].push_back(&batch.items.at(i));
    }
    Tower::Cache cu;
    Tower::Cache ct;
    const Vec h_u = model.user_tower.forward(model.user_input(ex.user_row, seq), cu);
    const Vec h_t = model.tag_tower.forward(model.tag_input(ex.tag_tokens), ct);
    Vec dh_u(d, 0.0);
    Vec dh_t(d, 0.0);
    Vec* du = grad ? &dh_u : nullptr;
    Vec* dt = grad ? &dh_t : nullptr;

    std::vector<const Vec*> cands;
    std::vector<Vec*> dcands;
    auto set_cands = [&](std::size_t first, const std::vector<std::size_t>& rest) {
      cands.clear();
      dcands.clear();
      ItemState& p = item(first);
      cands.push_back(&p.h);
      dcands.push_back(&p.dh);
      for (std::size_t i : rest) {
        ItemState& s = item(i);
        cands.push_back(&s.h);
        dcands.push_back(&s.dh);
      }
    };

    set_cands(ex.positive, ex.negatives);
    parts.col += contrast(h_u, cands, grad_scale, du, dcands);
    parts.tag += contrast(h_t, cands, grad_scale * alpha, dt, dcands);
    for (std::size_t vp : ex.cate_pos) {
      set_cands(vp, ex.cate_neg);
      parts.cate += contrast(h_t, cands, grad_scale * (1.0 - alpha), dt, dcands);
    }

    if (relu_mask) {
      model.user_tower.relu_mask(cu, *relu_mask);
      model.tag_tower.relu_mask(ct, *relu_mask);
    }
    if (!grad) continue;

    const Vec dx_u = model.user_tower.backward(cu, dh_u, grad->user_tower);
    double* urow = grad->user_table.row(ex.user_row);
    const std::size_t eu = model.user_table.dim;
    for (std::size_t k = 0; k < eu; ++k) urow[k] += dx_u[k];
    const std::size_t di = model.item_input_dim();
    for (std::size_t s = 0; s < ex.sequences.size() && s < model.cfg.behaviors.size(); ++s) {
      if (ex.sequences[s].empty()) continue;
      const double inv = 1.0 / static_cast<double>(ex.sequences[s].size());
      for (std::size_t i : ex.sequences[s]) {
        scatter_item(*grad, batch.items[i], dx_u.data() + eu + s * di, inv);
      }
    }

    const Vec dx_t = model.tag_tower.backward(ct, dh_t, grad->tag_tower);
    const double inv_t = 1.0 / static_cast<double>(ex.tag_tokens.size());
    for (std::size_t r : ex.tag_tokens) {
      double* row = grad->token_table.row(r);
      for (std::size_t k = 0; k < dx_t.size(); ++k) row[k] += inv_t * dx_t[k];
    }
  }

  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i]) continue;
    if (relu_mask) model.item_tower.relu_mask(items[i]->cache, *relu_mask);
    if (!grad) continue;
    const Vec dx = model.item_tower.backward(items[i]->cache, items[i]->dh, grad->item_tower);
    scatter_item(*grad, batch.items[i], dx.data(), 1.0);
  }
  return parts;
}

double loss_col(const TrainingBatch& batch, const TriTowerModel& model) {
  return compute_losses(model, batch, 0.5).col;
}

double loss_tag(const TrainingBatch& batch, const TriTowerModel& model) {
  return compute_losses(model, batch, 0.5).tag;
}

double loss_cate(const TrainingBatch& batch, const TriTowerModel& model) {
  return compute_losses(model, batch, 0.5).cate;
}

double loss_total(const TrainingBatch& batch, const TriTowerModel& model,
                  const LossConfig& cfg) {
  return compute_losses(model, batch, cfg.alpha).total(cfg.alpha);
}

}  // namespace tagrec::retrieval
