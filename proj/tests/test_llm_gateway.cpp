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

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/fixtures/world.hpp"
#include "tagrec/llm/gateway.hpp"
#include "tagrec/llm/http_provider.hpp"
#include "tagrec/llm/stub_provider.hpp"
#include "tagrec/llm/structured.hpp"

using namespace tagrec;
using namespace tagrec::llm;

namespace {

GatewayConfig no_sleep() {
  GatewayConfig cfg;
  cfg.sleep = [](std::chrono::milliseconds) {};
  return cfg;
}

std::shared_ptr<StubProvider> stub(StubKnobs knobs = {}) {
  return std::make_shared<StubProvider>(fixtures::stub_bank(), knobs);
}

Bindings tag_bindings() {
  return {{"user_attributes", "age 30"},
          {"user_interests", bullet_list({"tennis", "coffee", "hiking"})},
          {"click_sequence", "-"},
          {"purchase_sequence", "-"},
          {"search_sequence", "-"},
          {"extra_information", "2025-11-20, autumn"},
          {"tag_count", "50"}};
}

LlmRequest tag_request(std::uint64_t seed = 1) {
  LlmRequest r;
  r.tmpl = &default_template(Task::kTagPrediction);
  r.bindings = tag_bindings();
  r.seed = seed;
  return r;
}

class CountingProvider : public Provider {
 public:
  std::string name() const override { return "counting"; }
  ChatResponse complete(const ChatRequest&) override {
    const int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    ++calls;
    return {"ok", {}};
  }
  std::atomic<int> active{0}, peak{0}, calls{0};
};

}  // namespace

TEST_CASE("instantiate substitutes exactly") {
  PromptTemplate t(Task::kJudge, "A {{x}} B");
  CHECK(t.instantiate({{"x", "Q"}}) == "A Q B");
  CHECK(t.required_placeholders() == std::set<std::string>{"x"});
  // Values are inserted verbatim and never re-scanned.
  CHECK(t.instantiate({{"x", "{{x}}"}}) == "A {{x}} B");
  try {
    t.instantiate({});
    FAIL("expected a missing-binding error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("'x'") != std::string::npos);
  }
  CHECK_THROWS_AS(PromptTemplate(Task::kJudge, "{{a}} and {{a}}"), ValidationError);
  // Braces that do not form a name are plain text.
  PromptTemplate j(Task::kJudge, R"({ "k": {{v}} } {{ not a name }})");
  CHECK(j.required_placeholders().size() == 1);
}

TEST_CASE("default templates declare their placeholders") {
  CHECK(default_template(Task::kInterestMining).required_placeholders() ==
        std::set<std::string>{"user_attributes", "compressed_behaviors",
                              "matched_interest_pool"});
  CHECK(default_template(Task::kTagPrediction).required_placeholders() ==
        std::set<std::string>{"user_attributes", "user_interests", "click_sequence",
                              "purchase_sequence", "search_sequence",
                              "extra_information", "tag_count"});
  CHECK(default_template(Task::kExplanation).required_placeholders() ==
        std::set<std::string>{"user_interest", "date_information",
                              "item_information"});
  CHECK(default_template(Task::kExplanation).body().find("\"Explation\"") !=
        std::string::npos);
  CHECK(default_template(Task::kInterestMining)
            .body()
            .starts_with("# Role\nYou are a shopping guide for an e-commerce platform."));
  for (auto task : {Task::kInterestMining, Task::kTagPrediction, Task::kExplanation,
                    Task::kJudge, Task::kInterestCompletion}) {
    CHECK(parse_task(to_string(task)) == task);
  }
}

TEST_CASE("interest prompt carries the compressed log verbatim") {
  const std::string log =
      "2025-11-01(purchase,favorite) | graphite pro tennis racket[c01; @Acme]\n"
      "2025-10(search) | yoga mat";
  const std::string prompt = default_template(Task::kInterestMining)
                                 .instantiate({{"user_attributes", "female, 30"},
                                               {"compressed_behaviors", log},
                                               {"matched_interest_pool", "- tennis"}});
  CHECK(prompt.find(log) != std::string::npos);
  CHECK(prompt.find("{{") == std::string::npos);
}

TEST_CASE("stub output is deterministic and cached") {
  auto p = stub();
  LlmGateway gw(p, no_sleep());
  auto a = gw.complete(tag_request());
  CHECK(gw.provider_calls() == 1);
  auto b = gw.complete(tag_request());
  CHECK(b.cached);
  CHECK(gw.provider_calls() == 1);
  CHECK(gw.cache_hits() == 1);
  CHECK(a.text == b.text);

  LlmGateway fresh(stub(), no_sleep());
  CHECK(fresh.complete(tag_request()).text == a.text);
  CHECK(fresh.complete(tag_request(2)).text != a.text);

  auto parsed = parse_tags(a.text);
  CHECK(parsed.mode == ParseMode::kStrict);
  CHECK(parsed.items.size() == 50);
}

TEST_CASE("cache on and off give identical parsed results") {
  GatewayConfig off = no_sleep();
  off.cache = false;
  LlmGateway with(stub(), no_sleep());
  LlmGateway without(stub(), off);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    with.complete(tag_request(seed));
    auto a = parse_tags(with.complete(tag_request(seed)).text).items;
    auto b = parse_tags(without.complete(tag_request(seed)).text).items;
    CHECK(a == b);
  }
  CHECK(without.provider_calls() == 5);
  CHECK(with.provider_calls() == 5);
}

TEST_CASE("transient failures are retried with backoff") {
  StubKnobs k;
  k.transient_failures = 2;
  std::vector<long> waits;
  GatewayConfig cfg;
  cfg.sleep = [&](std::chrono::milliseconds d) { waits.push_back(d.count()); };
  LlmGateway gw(stub(k), cfg);
  auto c = gw.complete(tag_request());
  CHECK(c.attempts == 3);
  CHECK(waits == std::vector<long>{100, 200});

  k.transient_failures = 4;
  LlmGateway broken(stub(k), no_sleep());
  CHECK_THROWS_AS(broken.complete(tag_request()), TransportError);
  CHECK(broken.provider_calls() == 4);
}

TEST_CASE("refusals are content errors and are not retried") {
  StubKnobs k;
  k.refuse = true;
  LlmGateway gw(stub(k), no_sleep());
  CHECK_THROWS_AS(gw.complete(tag_request()), ContentError);
  CHECK(gw.provider_calls() == 1);
}

TEST_CASE("prompts over the context limit are never sent") {
  GatewayConfig cfg = no_sleep();
  cfg.context_limit = 50;
  auto p = stub();
  LlmGateway gw(p, cfg);
  CHECK_THROWS_AS(gw.complete(tag_request()), RangeError);
  CHECK(p->calls() == 0);
  CHECK(GatewayConfig{}.context_limit == 128000);
}

TEST_CASE("in-flight requests stay under the limit") {
  auto p = std::make_shared<CountingProvider>();
  GatewayConfig cfg = no_sleep();
  cfg.max_in_flight = 2;
  cfg.cache = false;
  LlmGateway gw(p, cfg);
  PromptTemplate t(Task::kJudge, "{{n}}");
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      LlmRequest r;
      r.tmpl = &t;
      r.bindings = {{"n", std::to_string(i)}};
      gw.complete(r);
    });
  }
  for (auto& th : threads) th.join();
  CHECK(p->calls == 8);
  CHECK(p->peak <= 2);
  CHECK(gw.peak_in_flight() <= 2);
}

TEST_CASE("strict and repaired parsing") {
  const std::string arr = R"([
  {"ID": "matched interest_01", "Interest": "tennis", "Stage": "long-term", "Reason": "bought a racket"},
  {"ID": "matched interest_02", "Interest": "coffee", "Stage": "recent", "Reason": "bought beans"}
])";
  auto strict = parse_interests(arr);
  CHECK(strict.mode == ParseMode::kStrict);
  REQUIRE(strict.items.size() == 2);
  CHECK(strict.items[1].interest == "coffee");

  auto wrapped = parse_interests("Here is the result: " + arr + " Hope this helps");
  CHECK(wrapped.mode == ParseMode::kRepaired);
  CHECK(wrapped.items == strict.items);

  auto trailing = parse_interests(R"([{"Interest": "a", "Reason": "b",},])");
  CHECK(trailing.mode == ParseMode::kRepaired);
  CHECK(trailing.items.size() == 1);

  // A comma inside a string literal is not touched.
  auto inside = parse_tags(R"([{"Item Tag": "x ,]", "Interest": "i", "Reason": "r",}])");
  REQUIRE(inside.items.size() == 1);
  CHECK(inside.items[0].tag == "x ,]");

  auto think = parse_interests("<think>[not json]</think>" + arr);
  CHECK(think.mode == ParseMode::kStrict);
  CHECK(think.items.size() == 2);

  try {
    parse_tags("no brackets here");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.raw() == "no brackets here");
  }
  auto partial = parse_tags(R"([{"Item Tag": "a b c", "Interest": "i", "Reason": "r"}, {"Item Tag": ""}])");
  CHECK(partial.items.size() == 1);
  CHECK(partial.dropped == 1);
}

TEST_CASE("explanation key spellings") {
  auto a = parse_explanation(R"({"Explation":"轻便出行好伙伴"})");
  REQUIRE(a.items.size() == 1);
  CHECK(a.items[0].explanation == "轻便出行好伙伴");
  CHECK(parse_explanation(R"({"Explanation":"好物"})").items[0].explanation == "好物");
  CHECK_THROWS_AS(parse_explanation(R"({"Other":"x"})"), ParseError);
}

TEST_CASE("rendered strict outputs are parse fixed points") {
  std::vector<ParsedInterest> is = {{"a", "tennis", "long-term", "r1"},
                                    {"b", "咖啡", "", "理由"}};
  auto p = parse_interests(render_interests(is));
  CHECK(p.mode == ParseMode::kStrict);
  CHECK(p.items == is);
  std::vector<ParsedTag> ts = {{"graphite tennis racket", "tennis", "r"}};
  CHECK(parse_tags(render_tags(ts)).items == ts);
  ParsedExplanation e{"轻便出行好伙伴"};
  CHECK(parse_explanation(render_explanation(e)).items[0] == e);
}

TEST_CASE("stub pathology knobs") {
  StubKnobs k;
  k.malformed = true;
  LlmGateway gw(stub(k), no_sleep());
  const auto text = gw.complete(tag_request()).text;
  CHECK_FALSE(nlohmann::json::accept(text));
  auto repaired = parse_tags(text);
  CHECK(repaired.mode == ParseMode::kRepaired);
  CHECK(repaired.items.size() == 50);

  StubKnobs g;
  g.garbage = true;
  LlmGateway gg(stub(g), no_sleep());
  CHECK_THROWS_AS(parse_tags(gg.complete(tag_request()).text), ParseError);

  StubKnobs h;
  h.hallucinated_tag = true;
  LlmGateway gh(stub(h), no_sleep());
  auto tags = parse_tags(gh.complete(tag_request()).text).items;
  CHECK(tags.size() == 50);
  CHECK(tags.back().tag == kHallucinatedTag);

  StubKnobs few;
  few.tag_count = 30;
  LlmRequest r = tag_request();
  r.bindings.erase("tag_count");
  r.tmpl = nullptr;
  PromptTemplate no_count(Task::kTagPrediction, "{{user_interests}}");
  r.tmpl = &no_count;
  r.bindings = {{"user_interests", bullet_list({"yoga"})}};
  LlmGateway gf(stub(few), no_sleep());
  CHECK(parse_tags(gf.complete(r).text).items.size() == 30);
}

TEST_CASE("stub interests follow the matched pool first") {
  LlmRequest r;
  r.tmpl = &default_template(Task::kInterestMining);
  r.bindings = {{"user_attributes", "-"},
                {"compressed_behaviors", "-"},
                {"matched_interest_pool", bullet_list({"tennis", "coffee"})}};
  LlmGateway gw(stub(), no_sleep());
  auto items = parse_interests(gw.complete(r).text).items;
  REQUIRE(items.size() == 12);
  CHECK(items[0].interest == "tennis");
  CHECK(items[0].id == "matched interest_01");
  CHECK(items[1].interest == "coffee");
  CHECK(items[2].id == "extended interest_01");
}

TEST_CASE("chat wire shape") {
  ChatRequest req;
  req.prompt = "hello";
  req.temperature = 0.7;
  req.seed = 9;
  req.max_output_tokens = 64;
  auto body = build_chat_body("m", req);
  CHECK(body["model"] == "m");
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hello");
  CHECK(body["temperature"] == 0.7);
  CHECK(body["seed"] == 9);
  CHECK(body["max_tokens"] == 64);

  using nlohmann::json;
  CHECK(extract_chat_content(json::parse(
            R"({"choices":[{"message":{"content":"hi"},"finish_reason":"stop"}]})")) ==
        "hi");
  CHECK_THROWS_AS(extract_chat_content(json::parse(
                      R"({"choices":[{"message":{"content":""},"finish_reason":"content_filter"}]})")),
                  ContentError);
  CHECK_THROWS_AS(
      extract_chat_content(json::parse(
          R"({"choices":[{"message":{"content":null,"refusal":"no"}}]})")),
      ContentError);

  auto ep = parse_endpoint("http://localhost:8080/v1/chat/completions");
  CHECK(ep.host == "localhost");
  CHECK(ep.port == 8080);
  CHECK(ep.path == "/v1/chat/completions");
  CHECK(parse_endpoint("http://example.org").port == 80);
  CHECK_THROWS_AS(parse_endpoint("localhost:80"), ConfigError);
}

TEST_CASE("http provider against a local endpoint") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req,
                                          httplib::Response& res) {
    if (++hits == 1) {
      res.status = 503;
      return;
    }
    auto body = nlohmann::json::parse(req.body);
    const std::string auth = req.get_header_value("Authorization");
    nlohmann::json out = {
        {"choices",
         {{{"message", {{"content", "echo:" + body["messages"][0]["content"].get<std::string>() + "|" + auth}}},
           {"finish_reason", "stop"}}}},
        {"usage", {{"prompt_tokens", 3}, {"completion_tokens", 2}}}};
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpProviderConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.api_key = "secret";
  cfg.timeout = std::chrono::seconds(5);
  LlmGateway gw(std::make_shared<HttpChatProvider>(cfg), no_sleep());
  PromptTemplate t(Task::kJudge, "ping {{x}}");
  LlmRequest r;
  r.tmpl = &t;
  r.bindings = {{"x", "1"}};
  auto c = gw.complete(r);
  CHECK(c.attempts == 2);
  CHECK(c.text == "echo:ping 1|Bearer secret");
  CHECK(c.usage.completion_tokens == 2);
  server.stop();
  th.join();
}
