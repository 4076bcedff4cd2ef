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

#include "tagrec/retrieval/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/random.hpp"
#include "tagrec/common/text.hpp"

namespace tagrec::retrieval {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double score(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw ConfigError(fmt::format("score: dimension {} vs {}", a.size(), b.size()));
  }
  return dot(a.data(), b.data(), a.size());
}

Vec Tower::forward(const Vec& x) const {
  Cache c;
  return forward(x, c);
}

Vec Tower::forward(const Vec& x, Cache& cache) const {
  if (x.size() != input_dim()) {
    throw ConfigError(fmt::format("tower input has {} values, expected {}", x.size(),
                                  input_dim()));
  }
  cache.inputs.clear();
  cache.pre.clear();
  Vec cur = x;
  for (const Layer& l : layers) {
    cache.inputs.push_back(cur);
    Vec z(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      z[o] = l.b[o] + dot(l.w.data() + o * l.in, cur.data(), l.in);
    }
    cache.pre.push_back(z);
    if (l.act == Activation::kRelu) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    cur = std::move(z);
  }
  return cur;
}

Vec Tower::backward(const Cache& cache, const Vec& dout, Tower& grad) const {
  Vec d = dout;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Layer& l = layers[li];
    Layer& g = grad.layers[li];
    const Vec& z = cache.pre[li];
    const Vec& in = cache.inputs[li];
    if (l.act == Activation::kRelu) {
      for (std::size_t o = 0; o < l.out; ++o) {
        if (!(z[o] > 0.0)) d[o] = 0.0;
      }
    }
    Vec dx(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double go = d[o];
      if (go == 0.0) continue;
      g.b[o] += go;
      double* gw = g.w.data() + o * l.in;
      const double* w = l.w.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) {
        gw[i] += go * in[i];
        dx[i] += go * w[i];
      }
    }
    d = std::move(dx);
  }
  return d;
}

void Tower::relu_mask(const Cache& cache, std::vector<bool>& out) const {
  for (std::size_t li = 0; li < layers.size(); ++li) {
    if (layers[li].act != Activation::kRelu) continue;
    for (double v : cache.pre[li]) out.push_back(v > 0.0);
  }
}

std::size_t Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  tokens_.push_back(token);
  const std::size_t row = tokens_.size();
  index_.emplace(token, row);
  return row;
}

std::size_t Vocab::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kOovRow : it->second;
}

std::size_t discretize(double value, const BucketSpec& spec) {
  if (std::isnan(value)) throw ValidationError("discretize: NaN value");
  return static_cast<std::size_t>(
      std::upper_bound(spec.boundaries.begin(), spec.boundaries.end(), value) -
      spec.boundaries.begin());
}

BucketSpec fit_buckets(std::vector<double> values, std::size_t buckets) {
  if (buckets == 0) throw ValidationError("fit_buckets: need at least one bucket");
  BucketSpec spec;
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.empty()) return spec;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  for (std::size_t i = 1; i < buckets; ++i) {
    const double b = values[std::min(n - 1, i * n / buckets)];
    if (spec.boundaries.empty() || b > spec.boundaries.back()) spec.boundaries.push_back(b);
  }
  return spec;
}

std::vector<std::size_t> ModelConfig::hidden_widths() const {
  if (linear) return {};
  if (hidden.empty()) return {2 * out_dim};
  return hidden;
}

namespace {

Embedding make_table(std::string name, std::size_t rows, std::size_t dim, Rng& rng,
                     double std_dev) {
  Embedding e{std::move(name), rows, dim, std::vector<double>(rows * dim)};
  for (double& v : e.data) v = std_dev * rng.normal();
  return e;
}

Tower make_tower(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                 Rng& rng) {
  Tower t;
  std::size_t cur = in;
  auto add = [&](std::size_t width, Activation act) {
    Layer l;
    l.in = cur;
    l.out = width;
    l.act = act;
    l.w.resize(width * cur);
    l.b.assign(width, 0.0);
    const double s = std::sqrt(2.0 / static_cast<double>(cur + width));
    for (double& v : l.w) v = s * rng.normal();
    t.layers.push_back(std::move(l));
    cur = width;
  };
  for (std::size_t h : hidden) add(h, Activation::kRelu);
  add(out, Activation::kIdentity);
  return t;
}

void add_range(Vec& out, const double* src, std::size_t n, double scale) {
  for (std::size_t i = 0; i < n; ++i) out.push_back(scale * src[i]);
}

}  // namespace

std::size_t TriTowerModel::item_input_dim() const {
  std::size_t n = 0;
  for (const auto& t : item_tables) n += t.dim;
  return n;
}

std::size_t TriTowerModel::user_input_dim() const {
  return user_table.dim + cfg.behaviors.size() * item_input_dim();
}

ItemRows TriTowerModel::encode_item(const ItemFeatures& f) const {
  ItemRows rows;
  rows.reserve(item_tables.size());
  for (std::size_t i = 0; i < cfg.sparse_features.size(); ++i) {
    auto it = f.sparse.find(cfg.sparse_features[i]);
    rows.push_back(it == f.sparse.end() ? kOovRow : sparse_vocabs[i].lookup(it->second));
  }
  for (std::size_t i = 0; i < cfg.dense_features.size(); ++i) {
    auto it = f.dense.find(cfg.dense_features[i]);
    if (it == f.dense.end() || !std::isfinite(it->second)) {
      rows.push_back(kOovRow);
    } else {
      rows.push_back(1 + discretize(it->second, dense_buckets[i]));
    }
  }
  return rows;
}

std::vector<std::size_t> TriTowerModel::encode_tag(std::string_view tag) const {
  std::vector<std::size_t> rows;
  for (const auto& w : text::tokenize_words(tag)) rows.push_back(tokens.lookup(w));
  if (rows.empty()) rows.push_back(kOovRow);
  return rows;
}

Vec TriTowerModel::item_input(const ItemRows& rows) const {
  Vec x;
  x.reserve(item_input_dim());
  for (std::size_t i = 0; i < item_tables.size(); ++i) {
    add_range(x, item_tables[i].row(rows[i]), item_tables[i].dim, 1.0);
  }
  return x;
}

Vec TriTowerModel::user_input(std::size_t user_row,
                              const std::vector<std::vector<const ItemRows*>>& sequences) const {
  Vec x;
  x.reserve(user_input_dim());
  add_range(x, user_table.row(user_row), user_table.dim, 1.0);
  const std::size_t di = item_input_dim();
  for (std::size_t s = 0; s < cfg.behaviors.size(); ++s) {
    Vec pooled(di, 0.0);
    if (s < sequences.size() && !sequences[s].empty()) {
      for (const ItemRows* r : sequences[s]) {
        const Vec xi = item_input(*r);
        for (std::size_t k = 0; k < di; ++k) pooled[k] += xi[k];
      }
      const double inv = 1.0 / static_cast<double>(sequences[s].size());
      for (double& v : pooled) v *= inv;
    }
    x.insert(x.end(), pooled.begin(), pooled.end());
  }
  return x;
}

Vec TriTowerModel::tag_input(const std::vector<std::size_t>& token_rows) const {
  Vec x(token_table.dim, 0.0);
  for (std::size_t r : token_rows) {
    const double* row = token_table.row(r);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(token_rows.size());
  for (double& v : x) v *= inv;
  return x;
}

Vec TriTowerModel::embed_item(const ItemFeatures& f) const {
  return item_tower.forward(item_input(encode_item(f)));
}

Vec TriTowerModel::embed_user(std::string_view user_id,
                              const std::vector<std::vector<ItemFeatures>>& sequences) const {
  std::vector<std::vector<ItemRows>> encoded(sequences.size());
  std::vector<std::vector<const ItemRows*>> ptrs(sequences.size());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (const auto& f : sequences[s]) encoded[s].push_back(encode_item(f));
    for (const auto& r : encoded[s]) ptrs[s].push_back(&r);
  }
  return user_tower.forward(user_input(users.lookup(user_id), ptrs));
}

Vec TriTowerModel::embed_tag(std::string_view tag) const {
  return tag_tower.forward(tag_input(encode_tag(tag)));
}

std::vector<ParamView> TriTowerModel::params() {
  std::vector<ParamView> out;
  for (auto& t : item_tables) out.push_back({"emb." + t.name, t.data.data(), t.data.size()});
  out.push_back({"emb.user_id", user_table.data.data(), user_table.data.size()});
  out.push_back({"emb.token", token_table.data.data(), token_table.data.size()});
  auto tower = [&](const char* name, Tower& t) {
    for (std::size_t i = 0; i < t.layers.size(); ++i) {
      Layer& l = t.layers[i];
      out.push_back({fmt::format("{}.{}.w", name, i), l.w.data(), l.w.size()});
      out.push_back({fmt::format("{}.{}.b", name, i), l.b.data(), l.b.size()});
    }
  };
  tower("item", item_tower);
  tower("user", user_tower);
  tower("tag", tag_tower);
  return out;
}

std::size_t TriTowerModel::param_count() const {
  std::size_t n = 0;
  for (const auto& p : const_cast<TriTowerModel*>(this)->params()) n += p.size;
  return n;
}

TriTowerModel TriTowerModel::zeros_like() const {
  TriTowerModel z = *this;
  for (auto& p : z.params()) std::fill(p.data, p.data + p.size, 0.0);
  return z;
}

void TriTowerModel::check() const {
  auto chain = [](const Tower& t, std::size_t in, std::size_t out, const char* name) {
    std::size_t cur = in;
    for (const Layer& l : t.layers) {
      if (l.in != cur || l.w.size() != l.in * l.out || l.b.size() != l.out) {
        throw ConfigError(fmt::format("{} tower layers do not chain", name));
      }
      cur = l.out;
    }
    if (t.layers.empty() || cur != out) {
      throw ConfigError(fmt::format("{} tower outputs {}, expected {}", name, cur, out));
    }
  };
  if (item_tables.size() != cfg.sparse_features.size() + cfg.dense_features.size()) {
    throw ConfigError("item table count does not match the feature list");
  }
  chain(item_tower, item_input_dim(), cfg.out_dim, "item");
  chain(user_tower, user_input_dim(), cfg.out_dim, "user");
  chain(tag_tower, token_table.dim, cfg.out_dim, "tag");
}

TriTowerModel build_model(const ModelConfig& cfg, const std::vector<ItemFeatures>& items,
                          const std::vector<std::string>& users,
                          const std::vector<std::string>& tags) {
  if (cfg.emb_dim == 0 || cfg.out_dim == 0) throw ConfigError("model dims must be positive");
  TriTowerModel m;
  m.cfg = cfg;
  m.sparse_vocabs.resize(cfg.sparse_features.size());
  for (const auto& f : items) {
    for (std::size_t i = 0; i < cfg.sparse_features.size(); ++i) {
      auto it = f.sparse.find(cfg.sparse_features[i]);
      if (it != f.sparse.end()) m.sparse_vocabs[i].add(it->second);
    }
  }
  for (const auto& name : cfg.dense_features) {
    std::vector<double> values;
    for (const auto& f : items) {
      auto it = f.dense.find(name);
      if (it != f.dense.end()) values.push_back(it->second);
    }
    m.dense_buckets.push_back(fit_buckets(std::move(values), cfg.buckets));
  }
  for (const auto& u : users) m.users.add(u);
  for (const auto& t : tags) {
    for (const auto& w : text::tokenize_words(t)) m.tokens.add(w);
  }
  init_params(m);
  return m;
}

void init_params(TriTowerModel& m) {
  const ModelConfig& cfg = m.cfg;
  if (cfg.emb_dim == 0 || cfg.out_dim == 0) throw ConfigError("model dims must be positive");
  if (m.sparse_vocabs.size() != cfg.sparse_features.size() ||
      m.dense_buckets.size() != cfg.dense_features.size()) {
    throw ConfigError("vocabularies do not match the declared features");
  }
  m.item_tables.clear();
  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < cfg.sparse_features.size(); ++i) {
    m.item_tables.push_back(make_table(cfg.sparse_features[i], m.sparse_vocabs[i].size(),
                                       cfg.emb_dim, rng, cfg.init_std));
  }
  for (std::size_t i = 0; i < cfg.dense_features.size(); ++i) {
    m.item_tables.push_back(make_table(cfg.dense_features[i],
                                       m.dense_buckets[i].buckets() + 1, cfg.emb_dim, rng,
                                       cfg.init_std));
  }
  m.user_table = make_table("user_id", m.users.size(), cfg.emb_dim, rng, cfg.init_std);
  m.token_table = make_table("token", m.tokens.size(), cfg.emb_dim, rng, cfg.init_std);
  const auto hidden = cfg.hidden_widths();
  m.item_tower = make_tower(m.item_input_dim(), hidden, cfg.out_dim, rng);
  m.user_tower = make_tower(m.user_input_dim(), hidden, cfg.out_dim, rng);
  m.tag_tower = make_tower(cfg.emb_dim, hidden, cfg.out_dim, rng);
  m.check();
}

Vec fuse(const Vec& h_u, const Vec& h_t, const FusionConfig& cfg) {
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) {
    throw RangeError(fmt::format("beta {} outside [0, 1]", cfg.beta));
  }
  if (h_u.size() != h_t.size()) {
    throw ConfigError(fmt::format("fuse: dimension {} vs {}", h_u.size(), h_t.size()));
  }
  Vec out(h_u.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = cfg.beta * h_u[i] + (1.0 - cfg.beta) * h_t[i];
  }
  return out;
}

}  // namespace tagrec::retrieval
