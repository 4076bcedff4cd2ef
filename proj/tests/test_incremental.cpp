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

#include <map>
#include <set>
#include <stdexcept>

#include "tagrec/common/error.hpp"
#include "tagrec/common/random.hpp"
#include "tagrec/common/season.hpp"
#include "tagrec/fixtures/world.hpp"
#include "tagrec/incremental/pipeline.hpp"
#include "tagrec/llm/stub_provider.hpp"
#include "tagrec/llm/structured.hpp"

using namespace tagrec;
using namespace tagrec::incremental;
using events::BehaviorKind;

namespace {

constexpr Timestamp kNow = fixtures::kDefaultNow;

FeedbackRecord rec(std::string user, std::string title, std::string cate, Timestamp ts = kNow - 10,
                   std::string behavior = "click") {
  return {std::move(user), "i" + title, std::move(title), std::move(cate), std::move(behavior),
          ts, std::nullopt};
}

mining::CategoryInterests world_interests() {
  mining::CategoryInterests m;
  for (const auto& c : fixtures::categories()) m[c.id] = c.interest;
  return m;
}

class ThrowingJudge : public RecordJudge {
 public:
  std::optional<Judged> judge(const FeedbackRecord& r) override {
    if (r.item_title == "boom") throw TransportError("judge offline");
    if (r.item_title == "unsure") return std::nullopt;
    return Judged{true, true};
  }
};

TrainingSample sample(std::string user, std::string tag, std::string cate) {
  return {std::move(user), std::move(tag), "interest", "why", std::move(cate), 0};
}

}  // namespace

TEST_CASE("feedback window is [now - 14d, now) over item events") {
  std::vector<events::UserEvent> evs;
  auto add = [&](BehaviorKind k, Timestamp ts, bool item = true) {
    events::UserEvent e;
    e.user_id = "u1";
    e.behavior = k;
    e.timestamp = ts;
    if (item) e.item_id = "i" + std::to_string(evs.size());
    e.item_title = "thing";
    e.category_id = "c01";
    evs.push_back(e);
  };
  add(BehaviorKind::kPurchase, kNow - 14 * kSecondsPerDay);
  add(BehaviorKind::kOrdinaryClick, kNow - 14 * kSecondsPerDay - 1);
  add(BehaviorKind::kFavorite, kNow - 1);
  add(BehaviorKind::kOrdinaryClick, kNow);
  add(BehaviorKind::kSearch, kNow - 5, false);
  const auto out = select_feedback(evs, kNow);
  REQUIRE(out.size() == 2);
  CHECK(out[0].behavior == "purchase");
  CHECK(out[1].behavior == "click");
  CHECK_THROWS_AS(select_feedback(evs, kNow, 0), ConfigError);
}

TEST_CASE("purify splits by relevance then season and conserves records") {
  const std::vector<FeedbackRecord> records = {
      rec("u1", "Trail running shoes", "c03"), rec("u1", "Road running shoes", "c03"),
      rec("u1", "Chlorine swimsuit", "c10"),   rec("u1", "Goggle swimsuit", "c10"),
      rec("u1", "Lonely mug", "c05"),          rec("u2", "Lonely swimsuit", "c10"),
  };
  RuleRecordJudge judge(records, kNow);
  const auto r = purify(records, judge);
  CHECK(r.kept.size() == 2);
  REQUIRE(r.dropped.size() == 4);
  std::map<std::string, DropReason> reasons;
  for (const auto& d : r.dropped) reasons[d.record.item_title] = d.reason;
  CHECK(reasons.at("Chlorine swimsuit") == DropReason::kOffSeason);
  CHECK(reasons.at("Lonely mug") == DropReason::kIrrelevant);
  // Irrelevant and off-season: irrelevance is reported.
  CHECK(reasons.at("Lonely swimsuit") == DropReason::kIrrelevant);
  CHECK(r.review.empty());
  for (const auto& k : r.kept) CHECK(k.judged == Judged{true, true});
  CHECK(to_string(DropReason::kOffSeason) == "off_season");
}

TEST_CASE("purify sends judge failures to review") {
  ThrowingJudge judge;
  const std::vector<FeedbackRecord> records = {rec("u1", "boom", "c01"), rec("u1", "unsure", "c01"),
                                               rec("u1", "fine", "c01")};
  const auto r = purify(records, judge);
  CHECK(r.kept.size() == 1);
  CHECK(r.review.size() == 2);
  CHECK(r.dropped.empty());
}

TEST_CASE("purify conserves the shipped world's feedback") {
  const auto w = fixtures::generate_world();
  const auto records = select_feedback(w.events, w.now);
  REQUIRE(records.size() > 50);
  const auto history = select_feedback(w.events, w.now, 365);
  RuleRecordJudge judge(history, w.now);
  const auto r = purify(records, judge);
  CHECK(r.kept.size() + r.dropped.size() + r.review.size() == records.size());
  CHECK_FALSE(r.kept.empty());
  for (const auto& k : r.kept) CHECK(in_season(k.item_title, w.now));
}

TEST_CASE("completion keeps the title verbatim and skips failures") {
  const std::vector<FeedbackRecord> records = {rec("u1", "Merino thermal base layer", "c09"),
                                               rec("u1", "Orphan item", "c99")};
  TaxonomyCompleter completer(world_interests());
  const auto r = complete(records, {}, completer);
  CHECK(r.skipped == 1);
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples[0].tag == "Merino thermal base layer");
  CHECK(r.samples[0].interest == fixtures::find_category("c09")->interest);
  CHECK_FALSE(r.samples[0].rationale.empty());
  CHECK(r.samples[0].category == "c09");
}

TEST_CASE("llm completion derives the interest from the item") {
  const auto& cat = fixtures::categories().front();
  const std::string title = "Bright " + cat.cores.front();
  llm::LlmGateway gw(std::make_shared<llm::StubProvider>(fixtures::stub_bank()));
  LlmCompleter completer(gw, nullptr, nullptr);
  mining::InterestProfile p;
  p.user_id = "u1";
  p.interests.push_back({"Home cooking", "long-term", "r", {}});
  const auto r = complete({rec("u1", title, cat.id)},
                          [&](std::string_view) { return &p; }, completer);
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples[0].interest == cat.interest);
  CHECK(r.samples[0].tag == title);

  llm::StubKnobs refuse;
  refuse.refuse = true;
  llm::LlmGateway bad(std::make_shared<llm::StubProvider>(fixtures::stub_bank(), refuse));
  LlmCompleter failing(bad, nullptr, nullptr);
  const auto f = complete({rec("u1", title, cat.id), rec("u1", title, cat.id)}, {}, failing);
  CHECK(f.samples.empty());
  CHECK(f.skipped == 2);
}

TEST_CASE("balance caps an adversarial user at 80 tags and 2 per category") {
  std::vector<TrainingSample> in;
  for (int c = 0; c < 10; ++c) {
    for (int t = 0; t < 50; ++t) {
      in.push_back(sample("u1", "tag" + std::to_string(c) + "_" + std::to_string(t),
                          "c" + std::to_string(c)));
    }
  }
  BalanceConfig cfg;
  cfg.seed = 3;
  const auto out = balance(in, cfg);
  std::map<std::string, int> per_cate;
  std::set<std::string> tags;
  for (const auto& s : out) {
    ++per_cate[s.category];
    tags.insert(s.tag);
  }
  CHECK(tags.size() == out.size());
  CHECK(out.size() <= 20);
  CHECK(out.size() >= 18);  // every category keeps >= 2 of 80 drawn tags w.h.p.
  for (const auto& [c, n] : per_cate) CHECK(n <= 2);
  CHECK(balance(in, cfg) == out);
  cfg.seed = 4;
  CHECK(balance(in, cfg) != out);
}

TEST_CASE("balance invariants over random inputs") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<TrainingSample> in;
    const std::size_t users = 1 + rng.uniform_index(4);
    for (std::size_t u = 0; u < users; ++u) {
      const std::size_t n = rng.uniform_index(150);
      for (std::size_t i = 0; i < n; ++i) {
        in.push_back(sample("u" + std::to_string(u), "t" + std::to_string(rng.uniform_index(120)),
                            "c" + std::to_string(rng.uniform_index(6))));
        in.back().timestamp = static_cast<Timestamp>(i);
      }
    }
    BalanceConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto out = balance(in, cfg);
    std::map<std::string, std::set<std::string>> utags;
    std::map<std::pair<std::string, std::string>, std::size_t> uc;
    std::map<std::pair<std::string, std::string>, std::size_t> uc_in;
    std::map<std::string, std::set<std::string>> utags_in;
    for (const auto& s : in) {
      ++uc_in[{s.user_id, s.category}];
      utags_in[s.user_id].insert(s.tag);
    }
    for (const auto& s : out) {
      CHECK(std::find(in.begin(), in.end(), s) != in.end());
      utags[s.user_id].insert(s.tag);
      ++uc[{s.user_id, s.category}];
    }
    for (const auto& [u, t] : utags) CHECK(t.size() <= 80);
    for (const auto& [k, n] : uc) CHECK(n <= 2);
    // With at most 80 distinct tags stage 1 keeps everything.
    for (const auto& [k, n] : uc_in) {
      if (utags_in[k.first].size() <= 80) CHECK(uc[k] == std::min<std::size_t>(2, n));
    }
    CHECK(std::is_sorted(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return std::tie(a.user_id, a.category, a.tag) < std::tie(b.user_id, b.category, b.tag);
    }));
  }
}

TEST_CASE("balance stage 2 picks uniformly") {
  std::vector<TrainingSample> in;
  for (int t = 0; t < 5; ++t) in.push_back(sample("u1", "t" + std::to_string(t), "c1"));
  std::map<std::string, int> hits;
  const int trials = 4000;
  for (int s = 0; s < trials; ++s) {
    BalanceConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    for (const auto& x : balance(in, cfg)) ++hits[x.tag];
  }
  REQUIRE(hits.size() == 5);
  // Each tag is kept with probability 2/5; 4 sigma band.
  for (const auto& [t, n] : hits) CHECK(std::abs(n / double(trials) - 0.4) < 0.031);
}

TEST_CASE("balance global cap and category lookup") {
  std::vector<TrainingSample> in;
  for (int u = 0; u < 4; ++u) {
    in.push_back(sample("u" + std::to_string(u), "Red wok", ""));
    in.push_back(sample("u" + std::to_string(u), "Blue wok", ""));
  }
  BalanceConfig cfg;
  cfg.global_cate_cap = true;
  const auto out = balance(in, cfg, [](const std::string&) { return std::string("c02"); });
  CHECK(out.size() == 2);
  for (const auto& s : out) CHECK(s.category == "c02");
  cfg.global_cate_cap = false;
  CHECK(balance(in, cfg, [](const std::string&) { return std::string("c02"); }).size() == 8);
}

TEST_CASE("hr_at_k against a nested-loop oracle") {
  const CategoryOf phi = [](const std::string& tag) { return tag.substr(0, 3); };
  SUBCASE("hand example") {
    const std::vector<EvalCase> eval = {{"a", 0, "c01"}, {"b", 0, "c02"}, {"c", 0, "c03"},
                                        {"d", 0, "c04"}};
    const std::map<std::string, std::vector<std::string>> pred = {
        {"a", {"c05 x", "c01 y"}}, {"b", {"c01 x", "c03 x"}}, {"c", {"c03 x"}}};
    const auto r = hr_at_k(eval, pred, phi, 2);
    CHECK(r.hits == 2);
    CHECK(r.missing_predictions == 1);
    CHECK(r.hr == doctest::Approx(0.5));
    CHECK(hr_at_k(eval, pred, phi, 1).hits == 1);
  }
  SUBCASE("random") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<EvalCase> eval;
      std::map<std::string, std::vector<std::string>> pred;
      const std::size_t n = 1 + rng.uniform_index(30);
      for (std::size_t u = 0; u < n; ++u) {
        const std::string id = "u" + std::to_string(u);
        eval.push_back({id, 0, "c0" + std::to_string(rng.uniform_index(9))});
        std::vector<std::string> tags;
        const std::size_t m = rng.uniform_index(40);
        for (std::size_t i = 0; i < m; ++i) {
          tags.push_back("c0" + std::to_string(rng.uniform_index(9)) + " t");
        }
        pred[id] = tags;
      }
      const std::size_t k = 1 + rng.uniform_index(35);
      std::size_t hits = 0;
      for (const auto& e : eval) {
        bool hit = false;
        const auto& t = pred[e.user_id];
        for (std::size_t i = 0; i < t.size() && i < k; ++i) hit = hit || phi(t[i]) == e.gt_category;
        hits += hit;
      }
      const auto r = hr_at_k(eval, pred, phi, k);
      CHECK(r.hits == hits);
      CHECK(r.hr == doctest::Approx(double(hits) / double(n)));
    }
  }
  CHECK_THROWS_AS(hr_at_k({}, {}, phi, 30), ValidationError);
  CHECK_THROWS_AS(hr_at_k({{"a", 0, "c01"}}, {}, phi, 0), ConfigError);
}

TEST_CASE("sft export and sample persistence round-trip") {
  const std::vector<TrainingSample> s = {
      {"u1", "Red wok", "Home cooking", "Bought a wok", "c02", 5},
      {"u1", "Trail shoes", "Running", "Runs daily", "c03", 6},
      {"u2", "Cat tower", "Pets", "Has a cat", "c07", 7}};
  mining::UserAttributes a;
  a.user_id = "u1";
  a.age = 31;
  const auto sft = export_sft(s, {{"u1", a}});
  REQUIRE(sft.size() == 2);
  CHECK(sft[0]["user_id"] == "u1");
  const std::string prompt = sft[0]["prompt"];
  CHECK(prompt.find("Home cooking; Running") != std::string::npos);
  CHECK(prompt.find("age: 31") != std::string::npos);
  const auto parsed = llm::parse_tags(sft[0]["response"].get<std::string>());
  REQUIRE(parsed.items.size() == 2);
  CHECK(parsed.items[0].tag == "Red wok");
  CHECK(parsed.items[1].reason == "Runs daily");
  for (const auto& x : s) CHECK(sample_from_json(to_json(x)) == x);
  CHECK_THROWS_AS(sample_from_json({{"user_id", "u"}, {"tag", ""}, {"interest", "x"}}),
                  ValidationError);
}
