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

#include "tagrec/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "tagrec/common/io.hpp"
#include "tagrec/common/random.hpp"
#include "tagrec/common/text.hpp"
#include "tagrec/fixtures/world.hpp"
#include "tagrec/llm/http_provider.hpp"
#include "tagrec/llm/stub_provider.hpp"
#include "tagrec/retrieval/checkpoint.hpp"
#include "tagrec/retrieval/train.hpp"

namespace tagrec::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

StageError::StageError(std::string stage, const Error& cause)
    : Error(fmt::format("{}: {}", stage, cause.what())),
      stage_(std::move(stage)),
      cause_kind_(cause.kind()) {}

StageError::StageError(std::string stage, const std::string& what)
    : Error(fmt::format("{}: {}", stage, what)), stage_(std::move(stage)), cause_kind_("error") {}

json to_json(const RecommendationBundle& b) {
  json items = json::array();
  for (const auto& i : b.items) {
    items.push_back({{"item_id", i.item_id},
                     {"score", i.score},
                     {"explanation", i.explanation},
                     {"interest", i.interest},
                     {"fallback", i.fallback}});
  }
  return {{"user_id", b.user_id},
          {"items", items},
          {"trace",
           {{"profile_id", b.trace.profile_id},
            {"tag_set_id", b.trace.tag_set_id},
            {"model_id", b.trace.model_id},
            {"explanation_table", b.trace.explanation_table},
            {"beta", b.trace.beta},
            {"query_tags", b.trace.query_tags}}}};
}

RecommendationBundle bundle_from_json(const json& j) {
  RecommendationBundle b;
  b.user_id = j.at("user_id").get<std::string>();
  for (const auto& i : j.at("items")) {
    b.items.push_back({i.at("item_id").get<std::string>(), i.at("score").get<double>(),
                       i.at("explanation").get<std::string>(),
                       i.value("interest", std::string()), i.value("fallback", false)});
  }
  const auto& t = j.at("trace");
  b.trace.profile_id = t.at("profile_id").get<std::string>();
  b.trace.tag_set_id = t.at("tag_set_id").get<std::string>();
  b.trace.model_id = t.at("model_id").get<std::string>();
  b.trace.explanation_table = t.at("explanation_table").get<std::string>();
  b.trace.beta = t.at("beta").get<double>();
  b.trace.query_tags = t.at("query_tags").get<std::size_t>();
  return b;
}

std::string dump_bundle(const RecommendationBundle& b) { return to_json(b).dump(2) + "\n"; }

Paths paths_for(const PipelineConfig& cfg) {
  Paths p;
  const fs::path data(cfg.data_dir);
  p.catalog = data / "catalog.jsonl";
  p.events = data / "events.jsonl";
  p.users = data / "users.jsonl";
  p.taxonomy = data / "taxonomy.json";
  p.eval = data / "eval.jsonl";
  p.work = fs::path(cfg.work_dir);
  p.profiles = p.work / "profiles.jsonl";
  p.tags = p.work / "tags.jsonl";
  p.model = p.work / "model.ttck";
  p.cate_taxonomy = p.work / "cate_taxonomy.json";
  p.explanations = p.work / "explanations.jsonl";
  p.buffer = p.work / "judge_buffer.jsonl";
  p.bundles = p.work / "bundles";
  p.compressed = p.work / "compressed";
  return p;
}

namespace {

std::shared_ptr<llm::Provider> make_provider(const PipelineConfig& cfg) {
  if (cfg.provider == "http") {
    llm::HttpProviderConfig h;
    h.endpoint = cfg.llm_endpoint;
    h.model = cfg.llm_model;
    if (const char* key = std::getenv("LLM_API_KEY")) h.api_key = key;
    return std::make_shared<llm::HttpChatProvider>(h);
  }
  return std::make_shared<llm::StubProvider>(fixtures::stub_bank());
}

// Runs `fn`, relabeling library errors with the stage name.
template <typename F>
auto staged(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const std::exception& e) {
    throw StageError(stage, std::string(e.what()));
  }
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg, std::shared_ptr<llm::Provider> provider)
    : cfg_(std::move(cfg)), paths_(paths_for(cfg_)) {
  validate(cfg_);
  if (!fs::exists(paths_.catalog)) {
    throw ConfigError(fmt::format("data_dir: {} not found", paths_.catalog.string()));
  }
  fs::create_directories(paths_.work);
  gateway_ = std::make_unique<llm::LlmGateway>(provider ? std::move(provider)
                                                        : make_provider(cfg_));
  now_ = cfg_.now;
  if (now_ == 0) {
    Timestamp latest = 0;
    for (const auto& e : events()) latest = std::max(latest, e.timestamp);
    now_ = (latest / kSecondsPerDay + 1) * kSecondsPerDay;
  }
}

void Pipeline::count(const char* stage) { ++runs_[stage]; }

std::size_t Pipeline::stage_runs(std::string_view stage) const {
  auto it = runs_.find(stage);
  return it == runs_.end() ? 0 : it->second;
}

const retrieval::Dataset& Pipeline::dataset() {
  std::lock_guard lock(mu_);
  if (!dataset_) dataset_ = staged("load", [&] { return retrieval::load_dataset(cfg_.data_dir); });
  return *dataset_;
}

const std::vector<events::UserEvent>& Pipeline::events() {
  std::lock_guard lock(mu_);
  if (!events_) {
    events_ = staged("load", [&] {
      std::vector<events::UserEvent> out;
      if (!fs::exists(paths_.events)) return out;
      for (const auto& line : io::read_lines(paths_.events)) {
        if (!text::trim(line).empty()) out.push_back(events::from_jsonl(line));
      }
      std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.user_id, a.timestamp) < std::tie(b.user_id, b.timestamp);
      });
      return out;
    });
  }
  return *events_;
}

events::BehaviorLog Pipeline::log(std::string_view user_id) {
  events::BehaviorLog log;
  log.user_id = std::string(user_id);
  for (const auto& e : events()) {
    if (e.user_id == user_id && e.timestamp < now_) log.events.push_back(e);
  }
  return log;
}

const std::map<std::string, mining::UserAttributes>& Pipeline::users() {
  std::lock_guard lock(mu_);
  if (!users_) {
    users_ = staged("load", [&] {
      return fs::exists(paths_.users) ? mining::load_users(paths_.users)
                                      : std::map<std::string, mining::UserAttributes>{};
    });
  }
  return *users_;
}

const mining::CategoryInterests& Pipeline::category_interests() {
  std::lock_guard lock(mu_);
  if (!interests_) {
    interests_ = staged("load", [&] { return mining::load_category_interests(paths_.taxonomy); });
  }
  return *interests_;
}

judge::VerdictProvider& Pipeline::judge() {
  std::lock_guard lock(mu_);
  if (!judge_) {
    if (cfg_.judge == "llm") {
      judge_ = std::make_unique<judge::LlmJudge>(*gateway_, nullptr, cfg_.seed);
    } else {
      judge::RuleJudgeConfig rc;
      rc.interest_by_category = category_interests();
      judge_ = std::make_unique<judge::RuleJudge>(rc);
    }
  }
  return *judge_;
}

judge::JudgeBuffer& Pipeline::buffer() {
  std::lock_guard lock(mu_);
  if (!buffer_) buffer_ = std::make_unique<judge::JudgeBuffer>(paths_.buffer);
  return *buffer_;
}

compress::CompressedBehaviorLog Pipeline::compressed(std::string_view user_id) {
  return staged("compress", [&] {
    compress::CompressOptions opts;
    opts.now = now_;
    opts.budget = cfg_.token_budget;
    auto c = compress::compress_log(log(user_id), opts);
    fs::create_directories(paths_.compressed);
    io::write_file_atomic(paths_.compressed / (std::string(user_id) + ".txt"), c.rendered);
    return c;
  });
}

mining::InterestProfile Pipeline::profile(std::string_view user_id) {
  std::lock_guard lock(mu_);
  if (auto p = mining::find_profile(paths_.profiles, user_id)) return *p;
  const auto c = compressed(user_id);
  return staged(kStageMine, [&] {
    count(kStageMine);
    mining::UserAttributes attrs;
    auto it = users().find(std::string(user_id));
    if (it != users().end()) {
      attrs = it->second;
    } else {
      attrs.user_id = std::string(user_id);
    }
    const auto pool = mining::match_pool(c, category_interests(), cfg_.pool_size);
    mining::MiningOptions opts;
    opts.floor = cfg_.min_interests;
    opts.seed = cfg_.seed;
    opts.now = now_;
    auto p = mining::mine_interests(*gateway_, attrs, c, pool, opts);
    mining::ScreenOptions so;
    so.buffer = &buffer();
    p = mining::screen_interests(p, judge(), mining::judge_history(log(user_id)), so);
    mining::upsert_profile(paths_.profiles, p);
    return p;
  });
}

retrieval::TrainConfig Pipeline::train_config() const {
  retrieval::TrainConfig tc;
  tc.model.emb_dim = cfg_.emb_dim;
  tc.model.out_dim = cfg_.out_dim;
  tc.model.seed = cfg_.seed;
  tc.loss.alpha = cfg_.alpha;
  tc.loss.k_neg = cfg_.k_neg;
  tc.loss.learning_rate = cfg_.learning_rate;
  tc.loss.seed = cfg_.seed;
  tc.batch_size = cfg_.batch_size;
  tc.steps = cfg_.train_steps;
  return tc;
}

retrieval::TrainResult Pipeline::retrain() {
  std::lock_guard lock(mu_);
  return staged(kStageTrain, [&] {
    count(kStageTrain);
    auto r = retrieval::train(dataset(), train_config());
    retrieval::save_checkpoint(r.model, paths_.model);
    fs::remove(paths_.cate_taxonomy);
    fs::path sidecar = paths_.cate_taxonomy;
    sidecar += ".centroids";
    fs::remove(sidecar);
    model_ = r.model;
    index_.reset();
    taxonomy_.reset();
    validity_threshold_.reset();
    return r;
  });
}

const retrieval::TriTowerModel& Pipeline::model() {
  std::lock_guard lock(mu_);
  if (model_) return *model_;
  if (!fs::exists(paths_.model)) {
    retrain();
    return *model_;
  }
  model_ = staged(kStageTrain, [&] { return retrieval::load_checkpoint(paths_.model); });
  return *model_;
}

const retrieval::CatalogIndex& Pipeline::index() {
  std::lock_guard lock(mu_);
  if (!index_) {
    index_ = staged("retrieve", [&] { return retrieval::index_catalog(model(), dataset().catalog); });
  }
  return *index_;
}

const taxonomy::CategoryTaxonomy& Pipeline::cate_taxonomy() {
  std::lock_guard lock(mu_);
  if (taxonomy_) return *taxonomy_;
  taxonomy_ = staged(kStageTaxonomy, [&] {
    if (fs::exists(paths_.cate_taxonomy)) return taxonomy::load_taxonomy(paths_.cate_taxonomy);
    count(kStageTaxonomy);
    std::map<std::string, std::string> names;
    if (fs::exists(paths_.taxonomy)) {
      const json j = json::parse(io::read_file(paths_.taxonomy));
      for (const auto& c : j.at("categories")) {
        names[c.at("id").get<std::string>()] = c.value("name", std::string());
      }
    }
    auto t = taxonomy::build_taxonomy(dataset().catalog, model(), names);
    taxonomy::save_taxonomy(t, paths_.cate_taxonomy);
    return t;
  });
  return *taxonomy_;
}

std::string Pipeline::category_of(std::string_view tag) {
  return taxonomy::map_tag(cate_taxonomy(), model(), tag);
}

tagging::TagPredictionSet Pipeline::tag_set(std::string_view user_id) {
  std::lock_guard lock(mu_);
  for (auto& s : tagging::load_tag_sets(paths_.tags)) {
    if (s.user_id == user_id) return s;
  }
  const auto p = profile(user_id);
  const auto& m = model();
  const auto& idx = index();
  return staged(kStagePredict, [&] {
    count(kStagePredict);
    const auto lg = log(user_id);
    mining::UserAttributes attrs;
    auto it = users().find(std::string(user_id));
    if (it != users().end()) {
      attrs = it->second;
    } else {
      attrs.user_id = std::string(user_id);
    }
    tagging::PredictOptions opts;
    opts.tag_count = cfg_.tag_count;
    opts.seed = cfg_.seed;
    opts.now = now_;
    opts.allow_empty_profile = true;
    auto set = tagging::predict_tags(*gateway_, attrs, p, lg, "none", opts);
    if (!validity_threshold_) {
      validity_threshold_ = tagging::calibrate_validity(m, idx, dataset().tags());
    }
    tagging::ProbeValidity validity(m, idx, *validity_threshold_);
    tagging::ValidationConfig vc;
    vc.min_tags = cfg_.min_tags;
    const auto report = tagging::validate_set(set, p, lg, now_, validity, vc);
    mining::ScreenOptions so;
    so.buffer = &buffer();
    set = tagging::screen_tags(set, report, p, mining::judge_history(lg), judge(), so);
    tagging::upsert_tag_set(paths_.tags, set);
    return set;
  });
}

const explain::ExplanationTable& Pipeline::explanations() {
  std::lock_guard lock(mu_);
  if (!table_) table_ = staged(kStageExplain, [&] { return explain::load_table(paths_.explanations); });
  return *table_;
}

explain::BuildReport Pipeline::build_explanations(const std::vector<explain::Pair>& pairs,
                                                 const retrieval::Catalog* catalog) {
  std::lock_guard lock(mu_);
  explanations();
  return staged(kStageExplain, [&] {
    explain::GenerateOptions go;
    go.seed = cfg_.seed;
    const Timestamp date = now_;
    explain::Generator gen = [&](const std::string& interest, const retrieval::Item& item) {
      count(kStageExplain);
      return explain::generate_explanation(*gateway_, interest, item, date, go);
    };
    auto r = explain::build_table(*table_, pairs, catalog ? *catalog : dataset().catalog, gen,
                                  &judge());
    if (r.generated > 0) explain::save_table(*table_, paths_.explanations);
    return r;
  });
}

Pipeline::Retrieval Pipeline::retrieve(std::string_view user_id, std::size_t k, bool use_tags) {
  std::lock_guard lock(mu_);
  std::vector<std::string> query;
  if (use_tags) {
    const auto tags = tag_set(user_id);
    for (const auto& t : tags.triplets) {
      if (t.verdict && t.verdict->pass) query.push_back(t.tag);
    }
    if (query.empty()) query = tags.tags();
  }
  const auto& m = model();
  const auto& idx = index();
  return staged("retrieve", [&] {
    Retrieval r;
    r.query_tags = query.size();
    const retrieval::Vec h_u = retrieval::user_vector(m, dataset(), user_id, now_);
    retrieval::Vec q = h_u;
    if (!query.empty()) q = retrieval::fuse(h_u, retrieval::tags_vector(m, query), {cfg_.beta});
    r.hits = retrieval::retrieve_topk(idx, q, k);
    return r;
  });
}

RecommendationBundle Pipeline::run(std::string_view user_id, std::optional<std::size_t> k) {
  std::lock_guard lock(mu_);
  if (user_id.empty()) throw StageError("input", std::string("user_id is required"));
  const auto& ds = dataset();
  if (!std::binary_search(ds.users.begin(), ds.users.end(), std::string(user_id)) &&
      users().find(std::string(user_id)) == users().end()) {
    throw StageError("input", NotFoundError(fmt::format("unknown user '{}'", user_id)));
  }
  const auto p = profile(user_id);
  const auto tags = tag_set(user_id);
  const auto& m = model();

  RecommendationBundle b;
  b.user_id = std::string(user_id);
  b.trace.beta = cfg_.beta;
  b.trace.profile_id = fmt::format("{}#{}@{}", paths_.profiles.filename().string(), p.user_id,
                                   p.generated_at);
  b.trace.tag_set_id = fmt::format("{}#{}@{}", paths_.tags.filename().string(), tags.user_id,
                                   tags.generated_at);
  b.trace.model_id = fmt::format("{}#{}", paths_.model.filename().string(),
                                 hex64(fnv1a64(retrieval::serialize_model(m))));
  b.trace.explanation_table = paths_.explanations.filename().string();

  const auto r = retrieve(user_id, k.value_or(cfg_.top_k));
  const auto& hits = r.hits;
  b.trace.query_tags = r.query_tags;

  // Offline production for this user's linked (interest, item) pairs.
  std::set<std::string> hit_ids;
  for (const auto& h : hits) hit_ids.insert(h.item_id);
  const auto links = staged(kStageExplain, [&] {
    return explain::link_interests(
        tagging::load_tag_sets(paths_.tags),
        [&](const std::string& tag) { return category_of(tag); });
  });
  std::vector<explain::Pair> pairs;
  for (const auto& pr : explain::pair_candidates({p}, links, ds.catalog).pairs) {
    if (hit_ids.count(pr.item_id)) pairs.push_back(pr);
  }
  build_explanations(pairs);

  for (const auto& h : hits) {
    const auto& item = ds.catalog.at(ds.catalog.find(h.item_id));
    const auto e = explain::lookup(explanations(), item, p);
    b.items.push_back({h.item_id, h.score, e.explanation, e.interest, e.fallback});
  }
  staged("persist", [&] {
    fs::create_directories(paths_.bundles);
    io::write_file_atomic(paths_.bundles / (b.user_id + ".json"), dump_bundle(b));
    return 0;
  });
  return b;
}

}  // namespace tagrec::pipeline
