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

// Tri-tower retrieval model: item, user and tag towers producing vectors
// of a shared dimension whose dot products are the collaborative and
// semantic scores.

#ifndef TAGREC_RETRIEVAL_MODEL_HPP_
#define TAGREC_RETRIEVAL_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tagrec::retrieval {

using Vec = std::vector<double>;

// Sequential sum, so results do not depend on the kernel used.
double dot(const double* a, const double* b, std::size_t n);
double score(const Vec& a, const Vec& b);

enum class Activation { kIdentity, kRelu };

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
  Activation act = Activation::kIdentity;
};

struct Tower {
  std::vector<Layer> layers;

  struct Cache {
    std::vector<Vec> inputs;  // input of each layer
    std::vector<Vec> pre;     // pre-activation of each layer
  };

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  // Throws ConfigError when the input size does not match.
  Vec forward(const Vec& x) const;
  Vec forward(const Vec& x, Cache& cache) const;
  // Adds parameter gradients into `grad` (same shape) and returns dL/dx.
  Vec backward(const Cache& cache, const Vec& dout, Tower& grad) const;
  // Appends one bit per relu unit: pre-activation > 0.
  void relu_mask(const Cache& cache, std::vector<bool>& out) const;
};

struct Embedding {
  std::string name;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // rows x dim; row 0 is the out-of-vocabulary row

  const double* row(std::size_t r) const { return data.data() + r * dim; }
  double* row(std::size_t r) { return data.data() + r * dim; }
};

inline constexpr std::size_t kOovRow = 0;

// Token -> row, with row 0 reserved for unknown tokens.
class Vocab {
 public:
  std::size_t add(const std::string& token);
  std::size_t lookup(std::string_view token) const;
  std::size_t size() const { return tokens_.size() + 1; }
  // Tokens in row order, starting at row 1.
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Sorted, distinct boundaries; bucket i is [b[i-1], b[i]) with open ends.
struct BucketSpec {
  std::vector<double> boundaries;
  std::size_t buckets() const { return boundaries.size() + 1; }
};

// Number of boundaries <= value. Throws ValidationError for NaN.
std::size_t discretize(double value, const BucketSpec& spec);
// Boundaries at the i/B quantiles of `values`, de-duplicated.
BucketSpec fit_buckets(std::vector<double> values, std::size_t buckets);

struct ItemFeatures {
  std::map<std::string, std::string> sparse;  // item_id, category, brand, ...
  std::map<std::string, double> dense;        // price, sales, ...
};

struct ModelConfig {
  std::size_t emb_dim = 16;
  std::size_t out_dim = 32;
  // Hidden widths of every tower. Empty means one relu layer of 2*out_dim;
  // `linear` drops hidden layers altogether.
  std::vector<std::size_t> hidden;
  bool linear = false;
  std::size_t buckets = 16;
  std::vector<std::string> sparse_features = {"item_id", "category", "brand"};
  std::vector<std::string> dense_features = {"price", "sales"};
  std::vector<std::string> behaviors = {"click", "purchase"};
  double init_std = 0.5;  // embedding rows ~ N(0, init_std^2)
  std::uint64_t seed = 7;

  std::vector<std::size_t> hidden_widths() const;
  bool operator==(const ModelConfig&) const = default;
};

// Embedding row per item table (sparse features then dense features).
using ItemRows = std::vector<std::size_t>;

struct ParamView {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

class TriTowerModel {
 public:
  ModelConfig cfg;
  std::vector<Vocab> sparse_vocabs;  // per sparse feature
  std::vector<BucketSpec> dense_buckets;  // per dense feature
  Vocab users;
  Vocab tokens;
  std::vector<Embedding> item_tables;  // sparse tables then dense tables
  Embedding user_table;
  Embedding token_table;
  Tower item_tower;
  Tower user_tower;
  Tower tag_tower;

  std::size_t item_input_dim() const;
  std::size_t user_input_dim() const;

  // Missing or unknown features use the OOV row.
  ItemRows encode_item(const ItemFeatures& f) const;
  // Token rows of a tag; a tag without tokens maps to [OOV].
  std::vector<std::size_t> encode_tag(std::string_view tag) const;

  // Concatenated feature embeddings, before the item network.
  Vec item_input(const ItemRows& rows) const;
  Vec user_input(std::size_t user_row,
                 const std::vector<std::vector<const ItemRows*>>& sequences) const;
  Vec tag_input(const std::vector<std::size_t>& token_rows) const;

  Vec embed_item(const ItemFeatures& f) const;
  // One item list per behavior slot, in cfg.behaviors order; missing
  // slots and empty lists pool to zeros.
  Vec embed_user(std::string_view user_id,
                 const std::vector<std::vector<ItemFeatures>>& sequences) const;
  Vec embed_tag(std::string_view tag) const;

  // Every parameter tensor in a fixed order.
  std::vector<ParamView> params();
  std::size_t param_count() const;
  // Same shapes, all parameters zero.
  TriTowerModel zeros_like() const;
  // Throws ConfigError when dimensions do not chain.
  void check() const;
};

// Builds vocabularies from the items, users and tags, fits the dense
// buckets and initializes parameters from cfg.seed.
TriTowerModel build_model(const ModelConfig& cfg, const std::vector<ItemFeatures>& items,
                          const std::vector<std::string>& users,
                          const std::vector<std::string>& tags);

// Allocates every table and tower for the model's config and vocabularies
// and draws parameters from cfg.seed.
void init_params(TriTowerModel& m);

struct FusionConfig {
  double beta = 0.5;  // [0, 1]
};

// beta * h_u + (1 - beta) * h_t. Throws on a dimension mismatch or a beta
// outside [0, 1].
Vec fuse(const Vec& h_u, const Vec& h_t, const FusionConfig& cfg = {});

}  // namespace tagrec::retrieval

#endif  // TAGREC_RETRIEVAL_MODEL_HPP_
