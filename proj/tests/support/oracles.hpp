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

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the code under test except to read
// parameters.

#ifndef TAGREC_TESTS_SUPPORT_ORACLES_HPP_
#define TAGREC_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tagrec/common/random.hpp"
#include "tagrec/retrieval/loss.hpp"
#include "tagrec/retrieval/model.hpp"

namespace tagrec::oracle {

using retrieval::Example;
using retrieval::TrainingBatch;
using retrieval::TriTowerModel;
using retrieval::Vec;

// Naive dense forward pass.
inline Vec forward(const retrieval::Tower& t, Vec x) {
  for (const auto& l : t.layers) {
    Vec y(l.out, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < l.in; ++i) s += l.w[o * l.in + i] * x[i];
      s += l.b[o];
      y[o] = l.act == retrieval::Activation::kRelu ? std::max(0.0, s) : s;
    }
    x = std::move(y);
  }
  return x;
}

inline Vec item_concat(const TriTowerModel& m, const retrieval::ItemRows& rows) {
  Vec x;
  for (std::size_t t = 0; t < m.item_tables.size(); ++t) {
    const auto& tab = m.item_tables[t];
    for (std::size_t k = 0; k < tab.dim; ++k) x.push_back(tab.data[rows[t] * tab.dim + k]);
  }
  return x;
}

inline Vec h_item(const TriTowerModel& m, const retrieval::ItemRows& rows) {
  return forward(m.item_tower, item_concat(m, rows));
}

inline Vec h_user(const TriTowerModel& m, const TrainingBatch& b, const Example& ex) {
  Vec x;
  const auto& ut = m.user_table;
  for (std::size_t k = 0; k < ut.dim; ++k) x.push_back(ut.data[ex.user_row * ut.dim + k]);
  const std::size_t di = m.item_input_dim();
  for (std::size_t s = 0; s < m.cfg.behaviors.size(); ++s) {
    Vec pooled(di, 0.0);
    if (s < ex.sequences.size() && !ex.sequences[s].empty()) {
      for (std::size_t i : ex.sequences[s]) {
        const Vec c = item_concat(m, b.items[i]);
        for (std::size_t k = 0; k < di; ++k) pooled[k] += c[k] / ex.sequences[s].size();
      }
    }
    x.insert(x.end(), pooled.begin(), pooled.end());
  }
  return forward(m.user_tower, x);
}

inline Vec h_tag(const TriTowerModel& m, const std::vector<std::size_t>& tokens) {
  const auto& tt = m.token_table;
  Vec x(tt.dim, 0.0);
  for (std::size_t r : tokens) {
    for (std::size_t k = 0; k < tt.dim; ++k) x[k] += tt.data[r * tt.dim + k] / tokens.size();
  }
  return forward(m.tag_tower, x);
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// -log(exp(pos) / (exp(pos) + sum exp(neg))) by direct summation.
inline double nll(double pos, const std::vector<double>& neg) {
  double denom = std::exp(pos);
  for (double z : neg) denom += std::exp(z);
  return -std::log(std::exp(pos) / denom);
}

struct Losses {
  double col = 0.0;
  double tag = 0.0;
  double cate = 0.0;
};

inline Losses losses(const TriTowerModel& m, const TrainingBatch& b) {
  Losses out;
  for (const auto& ex : b.examples) {
    const Vec hu = h_user(m, b, ex);
    const Vec ht = h_tag(m, ex.tag_tokens);
    const Vec hp = h_item(m, b.items[ex.positive]);
    std::vector<double> nu;
    std::vector<double> nt;
    for (std::size_t n : ex.negatives) {
      const Vec hn = h_item(m, b.items[n]);
      nu.push_back(dot(hu, hn));
      nt.push_back(dot(ht, hn));
    }
    out.col += nll(dot(hu, hp), nu);
    out.tag += nll(dot(ht, hp), nt);
    std::vector<double> nc;
    for (std::size_t n : ex.cate_neg) nc.push_back(dot(ht, h_item(m, b.items[n])));
    for (std::size_t p : ex.cate_pos) out.cate += nll(dot(ht, h_item(m, b.items[p])), nc);
  }
  return out;
}

// A small model over random items, users and tags.
inline TriTowerModel tiny_model(std::uint64_t seed, bool linear = false) {
  Rng rng(seed);
  retrieval::ModelConfig cfg;
  cfg.emb_dim = 3;
  cfg.out_dim = 4;
  cfg.hidden = {5};
  cfg.linear = linear;
  cfg.buckets = 4;
  cfg.init_std = 0.5;
  cfg.seed = seed;
  std::vector<retrieval::ItemFeatures> items;
  for (int i = 0; i < 8; ++i) {
    retrieval::ItemFeatures f;
    f.sparse["item_id"] = "i" + std::to_string(i);
    f.sparse["category"] = "c" + std::to_string(i % 3);
    f.sparse["brand"] = "b" + std::to_string(rng.uniform_index(4));
    f.dense["price"] = rng.uniform(1.0, 100.0);
    f.dense["sales"] = rng.uniform(0.0, 1000.0);
    items.push_back(std::move(f));
  }
  return retrieval::build_model(cfg, items, {"u1", "u2", "u3"},
                                {"red wool scarf", "trail shoes", "green tea", "wool"});
}

// Random references into a random item pool; `k_neg` 0 draws 1..4.
inline TrainingBatch random_batch(const TriTowerModel& m, Rng& rng, std::size_t examples,
                                  std::size_t k_neg = 0) {
  TrainingBatch b;
  const std::size_t pool = 3 + rng.uniform_index(6);
  for (std::size_t i = 0; i < pool; ++i) {
    retrieval::ItemRows rows;
    for (const auto& t : m.item_tables) rows.push_back(rng.uniform_index(t.rows));
    b.items.push_back(std::move(rows));
  }
  auto pick = [&](std::size_t n) {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform_index(pool));
    return v;
  };
  for (std::size_t e = 0; e < examples; ++e) {
    Example ex;
    ex.user_row = rng.uniform_index(m.user_table.rows);
    for (std::size_t s = 0; s < m.cfg.behaviors.size(); ++s) {
      ex.sequences.push_back(pick(rng.uniform_index(4)));
    }
    ex.positive = rng.uniform_index(pool);
    for (std::size_t n = 1 + rng.uniform_index(3); n > 0; --n) {
      ex.tag_tokens.push_back(rng.uniform_index(m.token_table.rows));
    }
    ex.negatives = pick(k_neg ? k_neg : 1 + rng.uniform_index(4));
    ex.cate_pos = pick(1 + rng.uniform_index(3));
    ex.cate_neg = pick(1 + rng.uniform_index(3));
    b.examples.push_back(std::move(ex));
  }
  return b;
}

struct GradReport {
  std::string worst_tensor;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose perturbation flipped a relu
  std::size_t tensors = 0;
};

inline constexpr double kGradFloor = 1e-6;

// Central differences of total(alpha) against the analytic gradient, for
// every coordinate of every tensor.
inline GradReport grad_check(TriTowerModel m, const TrainingBatch& b, double alpha,
                             double eps = 1e-4) {
  TriTowerModel g = m.zeros_like();
  std::vector<bool> base_mask;
  retrieval::compute_losses(m, b, alpha, &g, 1.0, &base_mask);
  GradReport rep;
  auto params = m.params();
  auto grads = g.params();
  rep.tensors = params.size();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size; ++i) {
      double& p = params[t].data[i];
      const double orig = p;
      std::vector<bool> mp;
      std::vector<bool> mm;
      p = orig + eps;
      const double lp = retrieval::compute_losses(m, b, alpha, nullptr, 1.0, &mp).total(alpha);
      p = orig - eps;
      const double lm = retrieval::compute_losses(m, b, alpha, nullptr, 1.0, &mm).total(alpha);
      p = orig;
      if (mp != base_mask || mm != base_mask) {
        ++rep.skipped;
        continue;
      }
      const double num = (lp - lm) / (2.0 * eps);
      const double ana = grads[t].data[i];
      const double rel =
          std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), kGradFloor});
      ++rep.checked;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_tensor = params[t].name;
      }
    }
  }
  return rep;
}

// Full sort by (score desc, id asc).
inline std::vector<std::pair<std::string, double>> full_sort(
    const std::vector<std::string>& ids, const std::vector<double>& vectors, std::size_t dim,
    const Vec& q) {
  std::vector<std::pair<std::string, double>> all;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += q[k] * vectors[i * dim + k];
    all.emplace_back(ids[i], s);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return all;
}

}  // namespace tagrec::oracle

#endif  // TAGREC_TESTS_SUPPORT_ORACLES_HPP_
