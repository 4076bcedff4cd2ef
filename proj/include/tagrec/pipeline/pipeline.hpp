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

// End-to-end loop: compression, interest mining, tag prediction,
// retrieval and explanation lookup. Every stage persists its artifact
// under the work directory and reuses it when present.

#ifndef TAGREC_PIPELINE_PIPELINE_HPP_
#define TAGREC_PIPELINE_PIPELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/compress/behavior_compression.hpp"
#include "tagrec/events/event_store.hpp"
#include "tagrec/explain/explanation.hpp"
#include "tagrec/judge/buffer.hpp"
#include "tagrec/judge/judge.hpp"
#include "tagrec/llm/gateway.hpp"
#include "tagrec/mining/interest_mining.hpp"
#include "tagrec/pipeline/config.hpp"
#include "tagrec/retrieval/dataset.hpp"
#include "tagrec/retrieval/model.hpp"
#include "tagrec/retrieval/retrieval.hpp"
#include "tagrec/retrieval/train.hpp"
#include "tagrec/tagging/tag_prediction.hpp"
#include "tagrec/taxonomy/tag_to_cate.hpp"

namespace tagrec::pipeline {

// A stage failed; `stage()` names it and `cause_kind()` the underlying
// error kind.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  StageError(std::string stage, const std::string& what);
  const std::string& stage() const noexcept { return stage_; }
  const std::string& cause_kind() const noexcept { return cause_kind_; }
  const char* kind() const noexcept override { return "stage"; }

 private:
  std::string stage_;
  std::string cause_kind_;
};

struct BundleItem {
  std::string item_id;
  double score = 0.0;
  std::string explanation;
  std::string interest;  // empty for fallbacks
  bool fallback = false;

  bool operator==(const BundleItem&) const = default;
};

struct BundleTrace {
  std::string profile_id;
  std::string tag_set_id;
  std::string model_id;
  std::string explanation_table;
  double beta = 0.5;
  std::size_t query_tags = 0;

  bool operator==(const BundleTrace&) const = default;
};

struct RecommendationBundle {
  std::string user_id;
  std::vector<BundleItem> items;  // descending score
  BundleTrace trace;

  bool operator==(const RecommendationBundle&) const = default;
};

nlohmann::json to_json(const RecommendationBundle& b);
RecommendationBundle bundle_from_json(const nlohmann::json& j);
// Canonical bytes: two-space indented JSON with a trailing newline.
std::string dump_bundle(const RecommendationBundle& b);

// Names used by stage_runs().
inline constexpr const char* kStageTrain = "train";
inline constexpr const char* kStageTaxonomy = "taxonomy";
inline constexpr const char* kStageMine = "mine";
inline constexpr const char* kStagePredict = "predict";
inline constexpr const char* kStageExplain = "explain";

struct Paths {
  std::filesystem::path catalog, events, users, taxonomy, eval;
  std::filesystem::path work, profiles, tags, model, cate_taxonomy, explanations, buffer,
      bundles, compressed;
};

Paths paths_for(const PipelineConfig& cfg);

class Pipeline {
 public:
  // A null provider is built from the config (stub or http).
  explicit Pipeline(PipelineConfig cfg, std::shared_ptr<llm::Provider> provider = nullptr);
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const PipelineConfig& config() const { return cfg_; }
  const Paths& paths() const { return paths_; }
  Timestamp now() const { return now_; }

  // Throws StageError labeled with the failing stage.
  RecommendationBundle run(std::string_view user_id, std::optional<std::size_t> k = {});

  const retrieval::Dataset& dataset();
  const std::vector<events::UserEvent>& events();
  events::BehaviorLog log(std::string_view user_id);
  const std::map<std::string, mining::UserAttributes>& users();
  const mining::CategoryInterests& category_interests();
  compress::CompressedBehaviorLog compressed(std::string_view user_id);
  mining::InterestProfile profile(std::string_view user_id);
  tagging::TagPredictionSet tag_set(std::string_view user_id);
  const retrieval::TriTowerModel& model();
  retrieval::TrainConfig train_config() const;
  // Trains from scratch, replaces the checkpoint and drops derived
  // artifacts (taxonomy centroids).
  retrieval::TrainResult retrain();
  struct Retrieval {
    std::vector<retrieval::Hit> hits;
    std::size_t query_tags = 0;
  };
  // Fused query over the user's tag set; collaborative only when
  // `use_tags` is false.
  Retrieval retrieve(std::string_view user_id, std::size_t k, bool use_tags = true);
  const retrieval::CatalogIndex& index();
  const taxonomy::CategoryTaxonomy& cate_taxonomy();
  std::string category_of(std::string_view tag);
  // Builds missing (interest, item) entries for the pairs and saves.
  explain::BuildReport build_explanations(const std::vector<explain::Pair>& pairs,
                                         const retrieval::Catalog* catalog = nullptr);
  const explain::ExplanationTable& explanations();

  llm::LlmGateway& gateway() { return *gateway_; }
  judge::VerdictProvider& judge();
  judge::JudgeBuffer& buffer();

  // How many times each stage regenerated its artifact in this process.
  std::size_t stage_runs(std::string_view stage) const;

 private:
  void count(const char* stage);

  PipelineConfig cfg_;
  Paths paths_;
  Timestamp now_ = 0;
  std::unique_ptr<llm::LlmGateway> gateway_;
  std::recursive_mutex mu_;
  std::map<std::string, std::size_t, std::less<>> runs_;

  std::optional<retrieval::Dataset> dataset_;
  std::optional<std::vector<events::UserEvent>> events_;
  std::optional<std::map<std::string, mining::UserAttributes>> users_;
  std::optional<mining::CategoryInterests> interests_;
  std::optional<retrieval::TriTowerModel> model_;
  std::optional<retrieval::CatalogIndex> index_;
  std::optional<taxonomy::CategoryTaxonomy> taxonomy_;
  std::optional<explain::ExplanationTable> table_;
  std::optional<double> validity_threshold_;
  std::unique_ptr<judge::VerdictProvider> judge_;
  std::unique_ptr<judge::JudgeBuffer> buffer_;
};

}  // namespace tagrec::pipeline

#endif  // TAGREC_PIPELINE_PIPELINE_HPP_
