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

#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include <unistd.h>

#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/common/random.hpp"
#include "tagrec/compress/behavior_compression.hpp"
#include "tagrec/fixtures/world.hpp"
#include "tagrec/judge/judge.hpp"
#include "tagrec/llm/stub_provider.hpp"
#include "tagrec/mining/interest_mining.hpp"

using namespace tagrec;
using namespace tagrec::mining;
using nlohmann::json;

namespace {

compress::BehaviorEntry entry(const std::string& id, const std::string& category,
                              Timestamp ts, Timestamp now,
                              events::BehaviorKind kind = events::BehaviorKind::kPurchase) {
  compress::BehaviorEntry e;
  e.item.item_id = id;
  e.item.name = "item " + id;
  e.item.category = category;
  e.bucket = compress::assign_bucket(ts, now);
  e.behavior = kind;
  e.timestamp = ts;
  return e;
}

struct Fixture {
  fixtures::World world = fixtures::generate_world();
  CategoryInterests taxonomy;
  std::shared_ptr<llm::StubProvider> provider =
      std::make_shared<llm::StubProvider>(fixtures::stub_bank());
  llm::LlmGateway gateway{provider};

  Fixture() {
    for (const auto& c : fixtures::categories()) taxonomy[c.id] = c.interest;
  }

  events::BehaviorLog log(const std::string& user) const {
    events::BehaviorLog l;
    l.user_id = user;
    for (const auto& e : world.events) {
      if (e.user_id == user) l.events.push_back(e);
    }
    return l;
  }

  UserAttributes attrs(const std::string& user) const {
    for (const auto& u : world.users) {
      if (u.user_id == user) return {u.user_id, u.age, u.gender, u.location, {}};
    }
    return {user, {}, {}, {}, {}};
  }

  InterestProfile mine(const std::string& user, MiningOptions opts = {}) {
    compress::CompressOptions co;
    co.now = world.now;
    const auto compressed = compress::compress_log(log(user), co);
    opts.now = world.now;
    return mine_interests(gateway, attrs(user), compressed,
                          match_pool(compressed, taxonomy, 30), opts);
  }
};

judge::RuleJudge rules(const CategoryInterests& taxonomy) {
  judge::RuleJudgeConfig cfg;
  cfg.interest_by_category = taxonomy;
  return judge::RuleJudge(cfg);
}

class DownJudge : public judge::VerdictProvider {
 public:
  std::string name() const override { return "down"; }
  std::optional<judge::QualityVerdict> judge(llm::Task, const json&) override {
    throw TransportError("judge endpoint unreachable");
  }
};

class SilentJudge : public judge::VerdictProvider {
 public:
  std::string name() const override { return "silent"; }
  std::optional<judge::QualityVerdict> judge(llm::Task, const json&) override {
    return std::nullopt;
  }
};

}  // namespace

TEST_CASE("attributes") {
  UserAttributes a{"u1", 30, "female", "Hangzhou", {{"vip", "gold"}}};
  CHECK(render_attributes(a) == "age: 30; gender: female; location: Hangzhou; vip: gold");
  CHECK(attributes_from_json(to_json(a)) == a);
  CHECK(render_attributes({"u2", {}, {}, {}, {}}) == "unknown");
  CHECK_THROWS_AS(validate({"u3", 131, {}, {}, {}}), ValidationError);
  CHECK_THROWS_AS(validate({"u3", -1, {}, {}, {}}), ValidationError);
}

TEST_CASE("match_pool: frequency ranking") {
  const Timestamp now = fixtures::kDefaultNow;
  const CategoryInterests taxonomy = {{"tennis gear", "tennis"}, {"cookware", "cooking"}};
  std::vector<compress::BehaviorEntry> entries = {
      entry("a", "tennis gear", now - 5 * kSecondsPerDay, now),
      entry("b", "tennis gear", now - 6 * kSecondsPerDay, now),
      entry("c", "tennis gear", now - 40 * kSecondsPerDay, now),
      entry("d", "cookware", now - 2 * kSecondsPerDay, now)};
  const auto log = compress::dual_aggregate("u", entries);
  CHECK(match_pool(log, taxonomy, 2).interests == std::vector<std::string>{"tennis", "cooking"});
  CHECK(match_pool(log, taxonomy, 1).interests == std::vector<std::string>{"tennis"});
  CHECK(match_pool(log, taxonomy, 0).interests.empty());
  CHECK(match_pool(log, {{"garden", "gardening"}}, 5).interests.empty());
  CHECK(match_pool(compress::CompressedBehaviorLog{}, taxonomy, 5).interests.empty());
  CHECK_THROWS_AS(match_pool(log, {}, 5), ValidationError);
}

TEST_CASE("match_pool: agrees with a frequency-count oracle") {
  const Timestamp now = fixtures::kDefaultNow;
  Rng rng(21);
  const std::vector<std::string> cats = {"c1", "c2", "c3", "c4", "c5", "c6"};
  const CategoryInterests taxonomy = {{"c1", "alpha"}, {"c2", "beta"}, {"c3", "gamma"},
                                      {"c4", "alpha"}, {"c5", "delta"}};
  const events::BehaviorKind kinds[] = {events::BehaviorKind::kPurchase,
                                        events::BehaviorKind::kFavorite,
                                        events::BehaviorKind::kSearch};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<compress::BehaviorEntry> entries;
    const std::size_t n = 1 + rng.uniform_index(40);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string item = "i" + std::to_string(rng.uniform_index(15));
      // Category is a function of the item id.
      const std::string cat = cats[std::stoi(item.substr(1)) % cats.size()];
      entries.push_back(entry(item, cat, now - static_cast<Timestamp>(rng.uniform_index(800)) * kSecondsPerDay,
                              now, kinds[rng.uniform_index(3)]));
    }
    const auto log = compress::dual_aggregate("u", entries);
    // Oracle: distinct (item, bucket label, behavior) triples per label.
    std::set<std::tuple<std::string, std::string, int>> triples;
    std::map<std::string, std::string> cat_of;
    for (const auto& e : entries) {
      triples.emplace(e.item.item_id, e.bucket.label, static_cast<int>(e.behavior));
      cat_of[e.item.item_id] = e.item.category;
    }
    std::map<std::string, std::size_t> freq;
    for (const auto& [item, bucket, kind] : triples) {
      auto it = taxonomy.find(cat_of[item]);
      if (it != taxonomy.end()) ++freq[it->second];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    const std::size_t m = rng.uniform_index(5);
    std::vector<std::string> expect;
    for (std::size_t i = 0; i < std::min(m, ranked.size()); ++i) expect.push_back(ranked[i].first);
    CHECK(match_pool(log, taxonomy, m).interests == expect);
  }
}

TEST_CASE("mine_interests: stub yields a full profile") {
  Fixture f;
  const auto p = f.mine("u001");
  CHECK(p.user_id == "u001");
  CHECK(p.interests.size() == 12);
  CHECK(p.flags.empty());
  CHECK(p.generated_at == f.world.now);
  std::set<std::string> labels;
  for (const auto& i : p.interests) labels.insert(i.label);
  CHECK(labels.size() == p.interests.size());

  // The matched pool leads the profile.
  compress::CompressOptions co;
  co.now = f.world.now;
  const auto pool = match_pool(compress::compress_log(f.log("u001"), co), f.taxonomy, 30);
  REQUIRE(!pool.interests.empty());
  for (std::size_t i = 0; i < pool.interests.size(); ++i) {
    CHECK(p.interests[i].label == pool.interests[i]);
  }
}

TEST_CASE("mine_interests: deterministic, floor and duplicates") {
  Fixture f;
  const auto a = f.mine("u002");
  f.gateway.clear_cache();
  CHECK(f.mine("u002") == a);

  f.provider->knobs().interest_count = 4;
  f.gateway.clear_cache();
  const auto short_profile = f.mine("u002");
  CHECK(short_profile.interests.size() == 4);
  CHECK(short_profile.has_flag(kFlagUnderFloor));

  f.provider->knobs().interest_count = 12;
  f.provider->knobs().duplicates = true;
  f.gateway.clear_cache();
  const auto dedup = f.mine("u002");
  CHECK(dedup.interests.size() == 12);
  CHECK(dedup.interests.front().reason == a.interests.front().reason);

  f.provider->knobs().duplicates = false;
  f.provider->knobs().interest_count = 0;
  f.gateway.clear_cache();
  const auto empty = f.mine("u002");
  CHECK(empty.interests.empty());
  CHECK(empty.has_flag(kFlagEmpty));

  f.provider->knobs().interest_count = 12;
  f.provider->knobs().malformed = true;
  f.gateway.clear_cache();
  const auto repaired = f.mine("u002");
  CHECK(repaired.has_flag(kFlagRepaired));
  CHECK(repaired.interests == a.interests);
}

TEST_CASE("mine_interests: unparseable output keeps the raw text") {
  Fixture f;
  f.provider->knobs().garbage = true;
  try {
    f.mine("u003");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.raw().find("lost track") != std::string::npos);
  }
}

TEST_CASE("screen_interests: rule judge keeps supported interests") {
  Fixture f;
  auto judge = rules(f.taxonomy);
  for (const char* user : {"u001", "u010", "u020"}) {
    const auto p = f.mine(user);
    const auto history = judge_history(f.log(user));
    const auto screened = screen_interests(p, judge, history);
    REQUIRE(screened.interests.size() == p.interests.size());
    std::size_t positive = 0;
    for (std::size_t i = 0; i < p.interests.size(); ++i) {
      CHECK(screened.interests[i].label == p.interests[i].label);
      REQUIRE(screened.interests[i].verdict);
      if (screened.interests[i].verdict->pass) ++positive;
    }
    const auto view = filtered(screened);
    CHECK(view.size() == positive);
    for (const auto& i : view) CHECK(i.verdict->pass);
    CHECK(*pass_rate(screened) ==
          doctest::Approx(static_cast<double>(positive) / p.interests.size()));
    // Pool interests carry repeated-purchase reasons and real support.
    CHECK(screened.interests.front().verdict->pass);
  }
  // The necessity extra never passes.
  const auto p = screen_interests(f.mine("u001"), judge, judge_history(f.log("u001")));
  for (const auto& i : p.interests) {
    if (i.label == "daily necessities") CHECK_FALSE(i.verdict->pass);
    if (i.label == "smart home") {
      CHECK(i.verdict->criteria.at("reasonableness") == "hallucination");
    }
  }
}

TEST_CASE("screen_interests: unavailable or silent judges") {
  Fixture f;
  const auto p = f.mine("u004");
  DownJudge down;
  const auto unscreened = screen_interests(p, down, json::array());
  CHECK(unscreened.has_flag(kFlagUnscreened));
  CHECK(unscreened.interests.size() == p.interests.size());
  CHECK(filtered(unscreened).empty());

  SilentJudge silent;
  judge::JudgeBuffer buffer;
  ScreenOptions opts;
  opts.buffer = &buffer;
  opts.round = 3;
  const auto routed = screen_interests(p, silent, json::array(), opts);
  CHECK_FALSE(routed.has_flag(kFlagUnscreened));
  CHECK(buffer.pending(llm::Task::kInterestMining).size() == p.interests.size());
  CHECK(buffer.samples().front().round == 3);
}

TEST_CASE("profiles persist as JSONL") {
  Fixture f;
  auto judge = rules(f.taxonomy);
  const auto a = screen_interests(f.mine("u001"), judge, judge_history(f.log("u001")));
  const auto b = f.mine("u002");
  CHECK(profile_from_json(to_json(a)) == a);
  const auto dir = std::filesystem::temp_directory_path() /
                   ("tagrec_profiles_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const auto path = dir / "profiles.jsonl";
  upsert_profile(path, a);
  upsert_profile(path, b);
  auto b2 = b;
  b2.generated_at += 1;
  upsert_profile(path, b2);
  const auto all = load_profiles(path);
  REQUIRE(all.size() == 2);
  CHECK(all[0] == a);
  CHECK(all[1] == b2);
  CHECK(find_profile(path, "u002") == b2);
  CHECK_FALSE(find_profile(path, "nobody"));
  std::filesystem::remove_all(dir);

  json dup = to_json(b);
  dup["interests"].push_back(dup["interests"][0]);
  CHECK_THROWS_AS(profile_from_json(dup), ValidationError);
}

TEST_CASE("judge_history keeps reliable events only") {
  events::BehaviorLog log;
  log.user_id = "u";
  events::UserEvent click;
  click.user_id = "u";
  click.item_id = "i1";
  click.item_title = "noise";
  click.category_id = "c1";
  click.behavior = events::BehaviorKind::kOrdinaryClick;
  events::UserEvent buy = click;
  buy.item_title = "swim goggles";
  buy.behavior = events::BehaviorKind::kPurchase;
  events::UserEvent search;
  search.user_id = "u";
  search.behavior = events::BehaviorKind::kSearch;
  search.query_text = "yoga mat";
  log.events = {click, buy, buy, search};
  const json h = judge_history(log);
  REQUIRE(h.size() == 2);
  CHECK(h[0]["title"] == "swim goggles");
  CHECK(h[1]["title"] == "yoga mat");
}
