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

#include "tagrec/llm/stub_provider.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "tagrec/common/random.hpp"
#include "tagrec/common/text.hpp"

namespace tagrec::llm {

using ojson = nlohmann::ordered_json;

namespace {

const char* const kStages[] = {"long-term", "recent", "seasonal"};

std::string binding(const ChatRequest& r, const char* key) {
  auto it = r.bindings.find(key);
  return it == r.bindings.end() ? std::string() : it->second;
}

// Trailing commas after every element and a prose wrapper: strict parsing
// fails, the single repair pass recovers it.
std::string malform(const std::string& json_text) {
  std::string out = "Here is the result:\n";
  for (std::size_t i = 0; i < json_text.size(); ++i) {
    const char c = json_text[i];
    if ((c == '}' || c == '"') && i + 1 < json_text.size()) {
      std::size_t j = i + 1;
      while (j < json_text.size() && (json_text[j] == ' ' || json_text[j] == '\n')) ++j;
      if (j < json_text.size() && (json_text[j] == ']' || json_text[j] == '}')) {
        out += c;
        out += ',';
        continue;
      }
    }
    out += c;
  }
  out += "\nHope this helps.";
  return out;
}

std::string core_of(const std::string& tag) {
  auto words = text::split_whitespace(tag);
  if (words.size() <= 1) return tag;
  const std::size_t n = std::min<std::size_t>(2, words.size() - 1);
  return text::join({words.end() - static_cast<std::ptrdiff_t>(n), words.end()}, " ");
}

}  // namespace

std::string bullet_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += '\n';
    out += "- ";
    out += item;
  }
  return out;
}

std::vector<std::string> parse_bullets(std::string_view t) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    std::size_t nl = t.find('\n', pos);
    if (nl == std::string_view::npos) nl = t.size();
    std::string_view line = text::trim(t.substr(pos, nl - pos));
    if (line.size() >= 2 && line[0] == '-' && line[1] == ' ') {
      out.emplace_back(text::trim(line.substr(2)));
    }
    pos = nl + 1;
  }
  return out;
}

std::uint64_t stub_seed(const ChatRequest& request) {
  std::uint64_t h = fnv1a64(to_string(request.task));
  for (const auto& [k, v] : request.bindings) {
    h = fnv1a64(k, h ^ 0x1f);
    h = fnv1a64(v, h ^ 0x1e);
  }
  return mix_seed(request.seed.value_or(0), hex64(h));
}

StubProvider::StubProvider(StubBank bank, StubKnobs knobs)
    : bank_(std::move(bank)), knobs_(std::move(knobs)) {
  failures_left_ = knobs_.transient_failures;
}

ChatResponse StubProvider::complete(const ChatRequest& request) {
  ++calls_;
  if (failures_left_.load() > 0 && failures_left_.fetch_sub(1) > 0) {
    throw TransientError("stub transient failure");
  }
  if (knobs_.refuse) throw ContentError("stub refused the request");

  const std::uint64_t seed = stub_seed(request);
  std::string body;
  switch (request.task) {
    case Task::kInterestMining: body = interests(request, seed); break;
    case Task::kTagPrediction: body = tags(request, seed); break;
    case Task::kExplanation: body = explanation(request, seed); break;
    case Task::kJudge: body = judge(request, seed); break;
    case Task::kInterestCompletion: body = completion(request, seed); break;
  }
  const bool garbage = request.task == Task::kJudge ? knobs_.judge_garbage
                                                    : knobs_.garbage;
  if (garbage) {
    body = "Sorry, I lost track of the format {\"partial\": [1, 2";
  } else if (knobs_.malformed) {
    body = malform(body);
  }
  if (knobs_.think) {
    body = "<think>Reviewing the behavior history step by step.</think>\n" + body;
  }
  ChatResponse out;
  out.usage.prompt_tokens = text::count_tokens(request.prompt);
  out.usage.completion_tokens = text::count_tokens(body);
  out.text = std::move(body);
  return out;
}

std::string StubProvider::interests(const ChatRequest& r,
                                    std::uint64_t seed) const {
  Rng rng(seed);
  const std::vector<std::string> pool =
      parse_bullets(binding(r, "matched_interest_pool"));
  std::vector<std::string> extras = bank_.extra_interests;
  rng.shuffle(extras);

  ojson arr = ojson::array();
  std::set<std::string> seen;
  std::size_t matched = 0;
  std::size_t extended = 0;
  auto emit = [&](const std::string& label, bool from_pool) {
    if (arr.size() >= knobs_.interest_count) return;
    if (!seen.insert(text::casefold(label)).second) return;
    const std::string id = from_pool
                               ? fmt::format("matched interest_{:02d}", ++matched)
                               : fmt::format("extended interest_{:02d}", ++extended);
    const std::string reason =
        from_pool ? fmt::format("Repeated purchases and favorites show a steady "
                                "{} habit across several periods",
                                label)
                  : fmt::format("Occasional browsing hints at {}", label);
    arr.push_back(ojson{{"ID", id},
                        {"Interest", label},
                        {"Stage", kStages[rng.uniform_index(3)]},
                        {"Reason", reason}});
  };
  for (const auto& label : pool) emit(label, true);
  for (const auto& label : extras) emit(label, false);
  if (knobs_.duplicates && !arr.empty()) {
    ojson dup = arr.front();
    dup["Reason"] = "Duplicate entry with a different reason";
    arr.push_back(dup);
  }
  return arr.dump(2);
}

std::string StubProvider::tags(const ChatRequest& r, std::uint64_t seed) const {
  Rng rng(seed);
  std::size_t want = knobs_.tag_count;
  if (auto n = binding(r, "tag_count"); !n.empty()) {
    try {
      want = std::stoul(n);
    } catch (const std::exception&) {
    }
  }
  const std::vector<std::string> interests =
      parse_bullets(binding(r, "user_interests"));

  // Round-robin over the profile so each interest contributes evenly.
  std::vector<std::vector<std::string>> lanes;
  for (const auto& interest : interests) {
    auto it = bank_.tags_by_interest.find(interest);
    std::vector<std::string> lane =
        it == bank_.tags_by_interest.end() ? std::vector<std::string>{} : it->second;
    rng.shuffle(lane);
    lanes.push_back(std::move(lane));
  }
  std::vector<std::pair<std::string, std::string>> picks;  // tag, interest
  std::set<std::string> seen;
  auto take = [&](const std::string& tag, const std::string& interest) {
    if (picks.size() >= want) return;
    if (seen.insert(text::casefold(tag)).second) picks.emplace_back(tag, interest);
  };
  for (std::size_t round = 0; picks.size() < want; ++round) {
    bool any = false;
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      if (round < lanes[i].size()) {
        take(lanes[i][round], interests[i]);
        any = true;
      }
    }
    if (!any) break;
  }
  std::vector<std::string> filler = bank_.filler_tags;
  rng.shuffle(filler);
  const std::string fallback_interest =
      interests.empty() ? std::string("general shopping") : interests.front();
  for (const auto& tag : filler) take(tag, fallback_interest);

  ojson arr = ojson::array();
  for (const auto& [tag, interest] : picks) {
    arr.push_back(ojson{
        {"Item Tag", tag},
        {"Interest", interest},
        {"Reason", fmt::format("A fresh {} fits the {} interest", core_of(tag),
                               interest)}});
  }
  if (knobs_.hallucinated_tag) {
    if (!arr.empty() && arr.size() >= want) arr.erase(arr.end() - 1);
    arr.push_back(ojson{{"Item Tag", kHallucinatedTag},
                        {"Interest", fallback_interest},
                        {"Reason", "A clever gadget for the desk"}});
  }
  if (knobs_.duplicates && !arr.empty()) arr.push_back(arr.front());
  return arr.dump(2);
}

std::string StubProvider::explanation(const ChatRequest&,
                                      std::uint64_t seed) const {
  std::string text;
  if (knobs_.explanation_override) {
    text = *knobs_.explanation_override;
  } else if (!bank_.explanations.empty()) {
    Rng rng(seed);
    text = bank_.explanations[rng.uniform_index(bank_.explanations.size())];
  } else {
    text = "好物值得拥有";
  }
  return ojson{{"Explation", text}}.dump();
}

// The criteria binding lists one "name: label / label / ..." bullet per
// criterion with the passing label first.
std::string StubProvider::judge(const ChatRequest& r, std::uint64_t seed) const {
  Rng rng(seed);
  ojson verdict = ojson::object();
  for (const auto& line : parse_bullets(binding(r, "criteria"))) {
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string name(text::trim(std::string_view(line).substr(0, colon)));
    std::vector<std::string> labels;
    std::string_view rest = std::string_view(line).substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      std::size_t slash = rest.find('/', pos);
      if (slash == std::string_view::npos) slash = rest.size();
      auto label = text::trim(rest.substr(pos, slash - pos));
      if (!label.empty()) labels.emplace_back(label);
      pos = slash + 1;
    }
    if (labels.empty()) continue;
    const bool flip = rng.uniform01() < knobs_.judge_flip_rate;
    verdict[name] = flip ? labels.back() : labels.front();
  }
  return verdict.dump();
}

std::string StubProvider::completion(const ChatRequest& r,
                                     std::uint64_t) const {
  const std::string item = text::casefold(binding(r, "item_information"));
  std::string interest = "general shopping";
  std::string hit;
  for (const auto& [keyword, label] : bank_.interest_by_keyword) {
    if (text::contains(item, keyword)) {
      interest = label;
      hit = keyword;
      break;
    }
  }
  const std::string reason =
      hit.empty() ? std::string("Bought for everyday use")
                  : fmt::format("The {} purchase continues the {} interest", hit,
                                interest);
  return ojson{{"Interest", interest}, {"Reason", reason}}.dump();
}

}  // namespace tagrec::llm
