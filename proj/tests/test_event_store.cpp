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
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/random.hpp"
#include "tagrec/events/event_store.hpp"

using namespace tagrec;
using namespace tagrec::events;

namespace {

UserEvent make(std::string user, BehaviorKind k, Timestamp ts,
               std::string item = "i1") {
  UserEvent e;
  e.user_id = std::move(user);
  e.behavior = k;
  e.timestamp = ts;
  if (k == BehaviorKind::kSearch) {
    e.query_text = "yoga mat";
  } else {
    e.item_id = std::move(item);
    e.item_title = "Cork yoga mat";
    e.category_id = "c04";
  }
  return e;
}

BehaviorLog random_log(Rng& rng, std::size_t n) {
  BehaviorLog log{"u1", {}};
  Timestamp ts = 1000;
  for (std::size_t i = 0; i < n; ++i) {
    ts += static_cast<Timestamp>(rng.uniform_index(5000));
    log.events.push_back(make("u1", kAllBehaviors[rng.uniform_index(7)], ts,
                              fmt::format("i{}", rng.uniform_index(20))));
  }
  return log;
}

}  // namespace

TEST_CASE("ingest counts accepted lines") {
  EventStore store;
  std::stringstream in;
  for (int i = 0; i < 3; ++i) {
    in << to_jsonl(make("u1", BehaviorKind::kPurchase, 100 + i)) << "\n";
  }
  auto report = store.ingest(in);
  CHECK(report.accepted == 3);
  CHECK(report.rejects.empty());
}

TEST_CASE("missing timestamp is rejected with its reason") {
  EventStore store;
  std::stringstream in;
  in << to_jsonl(make("u1", BehaviorKind::kPurchase, 100)) << "\n";
  in << R"({"user_id":"u1","item_id":"i2","behavior":"favorite"})" << "\n";
  in << to_jsonl(make("u1", BehaviorKind::kFavorite, 101)) << "\n";
  auto report = store.ingest(in);
  CHECK(report.accepted == 2);
  REQUIRE(report.rejects.size() == 1);
  CHECK(report.rejects[0].line == 2);
  CHECK(report.rejects[0].reason == "missing timestamp");
}

TEST_CASE("ten thousand line corpus matches a line-by-line oracle") {
  // Faults are injected at positions chosen here, so the expected reject
  // set is known independently of the parser.
  Rng rng(99);
  std::stringstream in;
  std::size_t expected_rejects = 0;
  std::vector<std::size_t> bad_lines;
  const char* faults[] = {
      R"({"user_id":"u1","behavior":"purchase","ts":5})",            // no item
      R"({"user_id":"u1","item_id":"x","behavior":"jump","ts":5})",  // kind
      R"({"user_id":"u1","behavior":"search","ts":5})",              // query
      R"({"user_id":"u1","item_id":"x","behavior":"favorite","ts":-3})",
      R"({"user_id":"u1","item_id":"x","behavior":"favorite","ts":1,"color":"r"})",
      R"(not json at all)",
      R"({"item_id":"x","behavior":"favorite","ts":9})",
      R"({"user_id":"u1","item_id":"x","behavior":"favorite","ts":9,"price":-1})",
  };
  for (std::size_t line = 1; line <= 10000; ++line) {
    if (rng.uniform01() < 0.03) {
      in << faults[rng.uniform_index(8)] << "\n";
      ++expected_rejects;
      bad_lines.push_back(line);
    } else {
      in << to_jsonl(make(fmt::format("u{}", rng.uniform_index(40)),
                          kAllBehaviors[rng.uniform_index(7)],
                          1 + static_cast<Timestamp>(rng.uniform_index(1000000))))
         << "\n";
    }
  }
  EventStore store;
  auto report = store.ingest(in);
  CHECK(report.accepted == 10000 - expected_rejects);
  REQUIRE(report.rejects.size() == expected_rejects);
  for (std::size_t i = 0; i < bad_lines.size(); ++i) {
    CHECK(report.rejects[i].line == bad_lines[i]);
  }
  CHECK(store.event_count() == report.accepted);
  for (const auto& user : store.users()) {
    auto log = store.log(user);
    REQUIRE(log);
    for (std::size_t i = 1; i < log->events.size(); ++i) {
      CHECK(log->events[i - 1].timestamp <= log->events[i].timestamp);
    }
  }
}

TEST_CASE("canonical serialization round-trips byte for byte") {
  UserEvent e = make("u7", BehaviorKind::kAddToCart, 1700000000, "i9");
  e.brand = "Acme";
  e.price = 19.5;
  e.attributes = {{"material", "wood"}, {"color", "brown"}};
  const std::string line = to_jsonl(e);
  CHECK(line ==
        R"({"user_id":"u7","item_id":"i9","behavior":"add_to_cart","ts":1700000000,"title":"Cork yoga mat","category":"c04","brand":"Acme","price":19.5,"attrs":{"material":"wood","color":"brown"}})");
  CHECK(from_jsonl(line) == e);
  CHECK(to_jsonl(from_jsonl(line)) == line);
  UserEvent s = make("u7", BehaviorKind::kSearch, 5);
  CHECK(to_jsonl(from_jsonl(to_jsonl(s))) == to_jsonl(s));
}

TEST_CASE("reliable filter drops only ordinary clicks") {
  BehaviorLog log{"u1",
                  {make("u1", BehaviorKind::kFavorite, 1),
                   make("u1", BehaviorKind::kOrdinaryClick, 2),
                   make("u1", BehaviorKind::kSearch, 3)}};
  auto f = reliable_filter(log);
  REQUIRE(f.events.size() == 2);
  CHECK(f.events[0].behavior == BehaviorKind::kFavorite);
  CHECK(f.events[1].behavior == BehaviorKind::kSearch);

  BehaviorLog clicks{"u1",
                     {make("u1", BehaviorKind::kOrdinaryClick, 1),
                      make("u1", BehaviorKind::kOrdinaryClick, 2)}};
  CHECK(reliable_filter(clicks).events.empty());

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto r = random_log(rng, 60);
    std::vector<UserEvent> oracle;
    for (const auto& e : r.events) {
      if (e.behavior != BehaviorKind::kOrdinaryClick) oracle.push_back(e);
    }
    auto once = reliable_filter(r);
    CHECK(once.events == oracle);
    CHECK(reliable_filter(once) == once);
  }
}

TEST_CASE("window is half-open and composes") {
  Rng rng(11);
  auto log = random_log(rng, 200);
  CHECK(window(log, 5000, 5000).events.empty());
  CHECK(window(log, 0, log.events.back().timestamp + 1) == log);
  CHECK_THROWS_AS(window(log, 10, 5), RangeError);
  for (int trial = 0; trial < 100; ++trial) {
    Timestamp a = static_cast<Timestamp>(rng.uniform_index(600000));
    Timestamp b = a + static_cast<Timestamp>(rng.uniform_index(300000));
    Timestamp c = b + static_cast<Timestamp>(rng.uniform_index(300000));
    std::vector<UserEvent> oracle;
    for (const auto& e : log.events) {
      if (e.timestamp >= a && e.timestamp < b) oracle.push_back(e);
    }
    CHECK(window(log, a, b).events == oracle);
    CHECK(window(window(log, a, c), a, b) == window(log, a, b));
  }
  // Fourteen-day selection.
  const Timestamp until = log.events.back().timestamp;
  const Timestamp since = until - 14 * kSecondsPerDay;
  std::size_t n = 0;
  for (const auto& e : log.events) n += (e.timestamp >= since && e.timestamp < until);
  CHECK(window(log, since, until).events.size() == n);
}

TEST_CASE("store persists to disk and reloads") {
  const auto dir = std::filesystem::temp_directory_path() / "tagrec_store_test";
  std::filesystem::remove_all(dir);
  {
    EventStore store(dir);
    store.append(make("user/1", BehaviorKind::kPurchase, 20));
    store.append(make("user/1", BehaviorKind::kFavorite, 10));
    store.append(make("u2", BehaviorKind::kSearch, 30));
    CHECK_THROWS_AS(store.append(make("", BehaviorKind::kSearch, 30)),
                    ValidationError);
  }
  EventStore again(dir);
  CHECK(again.event_count() == 3);
  auto log = again.log("user/1");
  REQUIRE(log);
  REQUIRE(log->events.size() == 2);
  CHECK(log->events[0].timestamp == 10);
  CHECK_FALSE(again.log("nobody"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent appends for distinct users all land") {
  EventStore store;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&store, t] {
      for (int i = 0; i < 250; ++i) {
        store.append(make(fmt::format("u{}", t), BehaviorKind::kPurchase, i + 1));
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(store.event_count() == 1000);
  CHECK(store.users().size() == 4);
}
