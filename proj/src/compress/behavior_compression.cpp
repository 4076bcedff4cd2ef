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

#include "tagrec/compress/behavior_compression.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "tagrec/common/error.hpp"
#include "tagrec/common/text.hpp"

namespace tagrec::compress {

namespace {

constexpr Timestamp kDaily = 30 * kSecondsPerDay;
constexpr Timestamp kMonthly = 365 * kSecondsPerDay;

bool is_special(char c) {
  switch (c) {
    case '\\': case ',': case '|': case '(': case ')': case '[': case ']':
    case ';': case '=': case '@': case '\n':
      return true;
    default:
      return false;
  }
}

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
    } else {
      if (is_special(c)) out.push_back('\\');
      out.push_back(c);
    }
  }
  return out;
}

std::tuple<Timestamp, int, int> context_key(const Context& c) {
  return {c.bucket.start, static_cast<int>(c.bucket.granularity),
          static_cast<int>(c.behavior)};
}

}  // namespace

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::kDaily: return "daily";
    case Granularity::kMonthly: return "monthly";
    case Granularity::kYearly: return "yearly";
  }
  return "daily";
}

CompressedItem compress_item(const events::UserEvent& event,
                             const ItemCompressionConfig& cfg) {
  CompressedItem item;
  item.item_id = event.item_id.value_or("");
  item.category = event.category_id;
  if (!event.item_title.empty()) {
    item.name = event.item_title;
  } else if (!event.category_id.empty()) {
    item.name = event.category_id;
  } else {
    throw ValidationError(fmt::format(
        "event for item '{}' has neither title nor category", item.item_id));
  }
  item.brand = event.brand;

  std::vector<std::size_t> order;
  std::vector<bool> used(event.attributes.size(), false);
  for (const auto& key : cfg.attribute_priority) {
    for (std::size_t i = 0; i < event.attributes.size(); ++i) {
      if (!used[i] && event.attributes[i].first == key) {
        order.push_back(i);
        used[i] = true;
      }
    }
  }
  for (std::size_t i = 0; i < event.attributes.size(); ++i) {
    if (!used[i]) order.push_back(i);
  }
  for (std::size_t i = 0; i < order.size() && i < cfg.max_attributes; ++i) {
    item.extra.push_back(event.attributes[order[i]]);
  }
  return item;
}

TimeBucket assign_bucket(Timestamp ts, Timestamp now) {
  if (ts > now) {
    throw RangeError(fmt::format("event timestamp {} is after now {}", ts, now));
  }
  const Timestamp age = now - ts;
  const CivilDate d = civil_from_timestamp(ts);
  TimeBucket b;
  if (age < kDaily) {
    b.granularity = Granularity::kDaily;
    b.label = format_day(ts);
    b.start = timestamp_from_civil(d);
  } else if (age < kMonthly) {
    b.granularity = Granularity::kMonthly;
    b.label = format_month(ts);
    b.start = timestamp_from_civil({d.year, d.month, 1});
  } else {
    b.granularity = Granularity::kYearly;
    b.label = format_year(ts);
    b.start = timestamp_from_civil({d.year, 1, 1});
  }
  return b;
}

std::size_t default_tokenizer(std::string_view s) {
  return text::count_tokens(s);
}

std::string render_item(const CompressedItem& item) {
  std::string out = escape(item.name);
  if (item.category.empty() && !item.brand && item.extra.empty()) return out;
  out += '[';
  out += escape(item.category);
  if (item.brand) {
    out += "; @";
    out += escape(*item.brand);
  }
  for (const auto& [k, v] : item.extra) {
    out += "; ";
    out += escape(k);
    out += '=';
    out += escape(v);
  }
  out += ']';
  return out;
}

std::string render(const std::vector<CompressedGroup>& groups) {
  std::string out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (g) out += '\n';
    std::size_t i = 0;
    bool first_bucket = true;
    while (i < group.contexts.size()) {
      const TimeBucket& bucket = group.contexts[i].bucket;
      if (!first_bucket) out += ", ";
      first_bucket = false;
      out += bucket.label;
      out += '(';
      bool first_behavior = true;
      while (i < group.contexts.size() && group.contexts[i].bucket == bucket) {
        if (!first_behavior) out += ',';
        first_behavior = false;
        out += events::to_string(group.contexts[i].behavior);
        ++i;
      }
      out += ')';
    }
    out += " | ";
    for (std::size_t k = 0; k < group.items.size(); ++k) {
      if (k) out += ", ";
      out += render_item(group.items[k]);
    }
  }
  return out;
}

CompressedBehaviorLog dual_aggregate(std::string user_id,
                                     const std::vector<BehaviorEntry>& entries,
                                     const Tokenizer& tokenizer) {
  struct KeyGroup {
    Context context;
    std::vector<CompressedItem> items;
    std::set<std::string> seen;
    Timestamp latest = 0;
  };
  // Step 1: (bucket, behavior) -> ordered unique items.
  std::vector<KeyGroup> keyed;
  std::map<std::tuple<std::string, int, int>, std::size_t> key_index;
  for (const auto& e : entries) {
    auto key = std::make_tuple(e.bucket.label,
                               static_cast<int>(e.bucket.granularity),
                               static_cast<int>(e.behavior));
    auto [it, inserted] = key_index.try_emplace(key, keyed.size());
    if (inserted) keyed.push_back({Context{e.bucket, e.behavior}, {}, {}, 0});
    KeyGroup& kg = keyed[it->second];
    kg.latest = std::max(kg.latest, e.timestamp);
    if (kg.seen.insert(e.item.item_id).second) kg.items.push_back(e.item);
  }

  // Step 2: ordered item-id sequence -> contexts.
  struct SeqGroup {
    CompressedGroup group;
    std::size_t first_seen = 0;
  };
  std::vector<SeqGroup> seqs;
  std::map<std::vector<std::string>, std::size_t> seq_index;
  for (std::size_t k = 0; k < keyed.size(); ++k) {
    const KeyGroup& kg = keyed[k];
    std::vector<std::string> ids;
    ids.reserve(kg.items.size());
    for (const auto& item : kg.items) ids.push_back(item.item_id);
    auto [it, inserted] = seq_index.try_emplace(std::move(ids), seqs.size());
    if (inserted) {
      SeqGroup sg;
      sg.group.items = kg.items;
      sg.first_seen = k;
      seqs.push_back(std::move(sg));
    }
    CompressedGroup& g = seqs[it->second].group;
    g.contexts.push_back(kg.context);
    g.latest = std::max(g.latest, kg.latest);
  }
  for (auto& sg : seqs) {
    std::stable_sort(sg.group.contexts.begin(), sg.group.contexts.end(),
                     [](const Context& a, const Context& b) {
                       return context_key(a) < context_key(b);
                     });
  }
  std::stable_sort(seqs.begin(), seqs.end(),
                   [](const SeqGroup& a, const SeqGroup& b) {
                     auto ka = context_key(a.group.contexts.front());
                     auto kb = context_key(b.group.contexts.front());
                     if (ka != kb) return ka < kb;
                     return a.first_seen < b.first_seen;
                   });

  CompressedBehaviorLog out;
  out.user_id = std::move(user_id);
  for (auto& sg : seqs) out.groups.push_back(std::move(sg.group));
  out.rendered = render(out.groups);
  out.token_count = tokenizer(out.rendered);
  return out;
}

namespace {

class RenderParser {
 public:
  explicit RenderParser(std::string_view text) : text_(text) {}

  std::vector<ParsedGroup> parse() {
    std::vector<ParsedGroup> groups;
    if (text_.empty()) return groups;
    while (true) {
      groups.push_back(parse_group());
      if (pos_ == text_.size()) break;
      expect('\n');
    }
    return groups;
  }

 private:
  [[noreturn]] void fail(std::string_view what) const {
    throw ParseError(fmt::format("rendered log: {} at offset {}", what, pos_),
                     std::string(text_));
  }

  bool at(char c) const { return pos_ < text_.size() && text_[pos_] == c; }

  void expect(char c) {
    if (!at(c)) fail(fmt::format("expected '{}'", c == '\n' ? 'n' : c));
    ++pos_;
  }

  void expect(std::string_view s) {
    if (text_.substr(pos_, s.size()) != s) fail(fmt::format("expected \"{}\"", s));
    pos_ += s.size();
  }

  // Reads escaped text up to (not including) an unescaped stop character.
  std::string read_text(std::string_view stops) {
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\\') {
        if (pos_ + 1 >= text_.size()) fail("dangling escape");
        const char n = text_[pos_ + 1];
        out.push_back(n == 'n' ? '\n' : n);
        pos_ += 2;
        continue;
      }
      if (stops.find(c) != std::string_view::npos) break;
      if (is_special(c)) fail(fmt::format("unescaped '{}'", c));
      out.push_back(c);
      ++pos_;
    }
    return out;
  }

  ParsedGroup parse_group() {
    ParsedGroup g;
    while (true) {
      std::string label;
      while (pos_ < text_.size() && text_[pos_] != '(') {
        if (text_[pos_] == '\n' || text_[pos_] == '|') fail("bucket label");
        label.push_back(text_[pos_++]);
      }
      expect('(');
      std::vector<BehaviorKind> behaviors;
      while (true) {
        std::string name;
        while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ')') {
          name.push_back(text_[pos_++]);
        }
        auto kind = events::parse_behavior(name);
        if (!kind) fail(fmt::format("unknown behavior '{}'", name));
        behaviors.push_back(*kind);
        if (at(',')) {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
      g.buckets.emplace_back(std::move(label), std::move(behaviors));
      if (at(',')) {
        expect(", ");
        continue;
      }
      break;
    }
    expect(" | ");
    while (true) {
      g.items.push_back(parse_item());
      if (at(',')) {
        expect(", ");
        continue;
      }
      break;
    }
    return g;
  }

  CompressedItem parse_item() {
    CompressedItem item;
    item.name = read_text(",[\n");
    if (!at('[')) return item;
    ++pos_;
    item.category = read_text(";]");
    while (at(';')) {
      expect("; ");
      if (at('@')) {
        ++pos_;
        item.brand = read_text(";]");
      } else {
        std::string key = read_text("=");
        expect('=');
        std::string value = read_text(";]");
        item.extra.emplace_back(std::move(key), std::move(value));
      }
    }
    expect(']');
    return item;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<ParsedGroup> parse_rendered(std::string_view text) {
  return RenderParser(text).parse();
}

std::vector<ParsedGroup> structure_of(const std::vector<CompressedGroup>& groups) {
  std::vector<ParsedGroup> out;
  for (const auto& g : groups) {
    ParsedGroup p;
    for (CompressedItem item : g.items) {
      item.item_id.clear();
      p.items.push_back(std::move(item));
    }
    for (const auto& c : g.contexts) {
      if (p.buckets.empty() || p.buckets.back().first != c.bucket.label) {
        p.buckets.emplace_back(c.bucket.label, std::vector<BehaviorKind>{});
      }
      p.buckets.back().second.push_back(c.behavior);
    }
    out.push_back(std::move(p));
  }
  return out;
}

CompressedBehaviorLog fit_budget(const CompressedBehaviorLog& log,
                                 std::size_t budget,
                                 const Tokenizer& tokenizer) {
  if (budget == 0) throw RangeError("token budget must be positive");
  if (log.token_count <= budget) return log;

  std::vector<std::size_t> order(log.groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return log.groups[a].latest < log.groups[b].latest;
  });
  std::vector<std::size_t> group_tokens(log.groups.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < log.groups.size(); ++i) {
    group_tokens[i] = tokenizer(render({log.groups[i]}));
    total += group_tokens[i];
  }

  std::vector<bool> keep(log.groups.size(), true);
  auto assemble = [&] {
    CompressedBehaviorLog out;
    out.user_id = log.user_id;
    for (std::size_t i = 0; i < log.groups.size(); ++i) {
      if (keep[i]) out.groups.push_back(log.groups[i]);
    }
    out.rendered = render(out.groups);
    out.token_count = tokenizer(out.rendered);
    return out;
  };

  // Per-group counts are exact for the default tokenizer; a custom one is
  // re-checked on the full rendering below.
  std::size_t next = 0;
  while (next + 1 < order.size() && total > budget) {
    keep[order[next]] = false;
    total -= group_tokens[order[next]];
    ++next;
  }
  CompressedBehaviorLog out = assemble();
  while (out.token_count > budget && next + 1 < order.size()) {
    keep[order[next++]] = false;
    out = assemble();
  }
  if (out.token_count <= budget) return out;

  // Only the newest group remains and it alone is over budget.
  out.truncated = true;
  CompressedGroup& g = out.groups.front();
  while (!g.items.empty()) {
    g.items.erase(g.items.begin());
    out.rendered = g.items.empty() ? std::string() : render(out.groups);
    out.token_count = tokenizer(out.rendered);
    if (out.token_count <= budget) break;
  }
  if (g.items.empty()) {
    out.groups.clear();
    out.rendered.clear();
    out.token_count = tokenizer(out.rendered);
  }
  return out;
}

CompressedBehaviorLog compress_log(const events::BehaviorLog& log,
                                   const CompressOptions& opts) {
  const events::BehaviorLog source =
      opts.reliable_only ? events::reliable_filter(log) : log;
  std::vector<BehaviorEntry> entries;
  entries.reserve(source.events.size());
  for (const auto& e : source.events) {
    if (e.timestamp > opts.now) continue;
    CompressedItem item;
    if (e.behavior == BehaviorKind::kSearch) {
      item.item_id = "query:" + e.query_text;
      item.name = e.query_text;
    } else {
      item = compress_item(e, opts.item);
    }
    entries.push_back(
        {std::move(item), assign_bucket(e.timestamp, opts.now), e.behavior,
         e.timestamp});
  }
  return fit_budget(dual_aggregate(log.user_id, entries), opts.budget);
}

}  // namespace tagrec::compress
