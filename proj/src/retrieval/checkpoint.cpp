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

#include "tagrec/retrieval/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>
#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"

namespace tagrec::retrieval {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', 'A', 'G', 'R', 'E', 'C', 'T', 'T'};

void put(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}

  std::uint64_t get(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_++])) << (8 * i);
    }
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) throw ValidationError("checkpoint truncated");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

std::vector<std::uint64_t> table_rows(const TriTowerModel& m) {
  std::vector<std::uint64_t> rows;
  for (const auto& t : m.item_tables) rows.push_back(t.rows);
  rows.push_back(m.user_table.rows);
  rows.push_back(m.token_table.rows);
  return rows;
}

json config_json(const ModelConfig& c) {
  return {{"emb_dim", c.emb_dim},   {"out_dim", c.out_dim},
          {"hidden", c.hidden},     {"linear", c.linear},
          {"buckets", c.buckets},   {"sparse_features", c.sparse_features},
          {"dense_features", c.dense_features}, {"behaviors", c.behaviors},
          {"init_std", c.init_std}, {"seed", c.seed}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.emb_dim = j.at("emb_dim").get<std::size_t>();
  c.out_dim = j.at("out_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.linear = j.at("linear").get<bool>();
  c.buckets = j.at("buckets").get<std::size_t>();
  c.sparse_features = j.at("sparse_features").get<std::vector<std::string>>();
  c.dense_features = j.at("dense_features").get<std::vector<std::string>>();
  c.behaviors = j.at("behaviors").get<std::vector<std::string>>();
  c.init_std = j.at("init_std").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Vocab vocab_from(const json& j) {
  Vocab v;
  for (const auto& t : j) v.add(t.get<std::string>());
  return v;
}

}  // namespace

std::string serialize_model(const TriTowerModel& model) {
  std::string out(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion, 4);
  put(out, model.cfg.emb_dim, 4);
  put(out, model.cfg.out_dim, 4);
  const auto rows = table_rows(model);
  put(out, rows.size(), 4);
  for (auto r : rows) put(out, r, 4);

  json meta;
  meta["config"] = config_json(model.cfg);
  meta["sparse_vocabs"] = json::array();
  for (const auto& v : model.sparse_vocabs) meta["sparse_vocabs"].push_back(v.tokens());
  meta["dense_buckets"] = json::array();
  for (const auto& b : model.dense_buckets) meta["dense_buckets"].push_back(b.boundaries);
  meta["users"] = model.users.tokens();
  meta["tokens"] = model.tokens.tokens();
  const std::string m = meta.dump();
  put(out, m.size(), 4);
  out += m;

  TriTowerModel copy = model;
  const auto params = copy.params();
  put(out, params.size(), 4);
  for (const auto& p : params) {
    put(out, p.name.size(), 2);
    out += p.name;
    put(out, p.size, 8);
    for (std::size_t i = 0; i < p.size; ++i) {
      put(out, std::bit_cast<std::uint32_t>(static_cast<float>(p.data[i])), 4);
    }
  }
  return out;
}

TriTowerModel deserialize_model(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw ValidationError("not a tagrec checkpoint");
  }
  const auto version = r.get(4);
  if (version != kCheckpointVersion) {
    throw ValidationError(fmt::format("unsupported checkpoint version {}", version));
  }
  const auto emb_dim = r.get(4);
  const auto out_dim = r.get(4);
  std::vector<std::uint64_t> rows(r.get(4));
  for (auto& v : rows) v = r.get(4);

  TriTowerModel m;
  try {
    const json meta = json::parse(r.bytes(r.get(4)));
    m.cfg = config_from(meta.at("config"));
    for (const auto& v : meta.at("sparse_vocabs")) m.sparse_vocabs.push_back(vocab_from(v));
    for (const auto& b : meta.at("dense_buckets")) {
      m.dense_buckets.push_back({b.get<std::vector<double>>()});
    }
    m.users = vocab_from(meta.at("users"));
    m.tokens = vocab_from(meta.at("tokens"));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("checkpoint metadata: {}", e.what()));
  }
  if (m.cfg.emb_dim != emb_dim || m.cfg.out_dim != out_dim) {
    throw ValidationError("checkpoint header dims disagree with metadata");
  }
  init_params(m);
  if (table_rows(m) != rows) throw ValidationError("checkpoint vocabulary sizes disagree");

  auto params = m.params();
  if (r.get(4) != params.size()) throw ValidationError("checkpoint tensor count mismatch");
  for (auto& p : params) {
    const std::string name = r.bytes(r.get(2));
    const auto n = r.get(8);
    if (name != p.name || n != p.size) {
      throw ValidationError(fmt::format("checkpoint tensor '{}' ({}) where '{}' ({}) expected",
                                        name, n, p.name, p.size));
    }
    for (std::size_t i = 0; i < p.size; ++i) {
      p.data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(r.get(4)));
    }
  }
  if (!r.done()) throw ValidationError("trailing bytes after checkpoint tensors");
  m.check();
  return m;
}

void save_checkpoint(const TriTowerModel& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_model(model));
}

TriTowerModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_model(io::read_file(path));
}

}  // namespace tagrec::retrieval
