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

// tagrec command-line interface.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "tagrec/common/error.hpp"
#include "tagrec/common/io.hpp"
#include "tagrec/common/text.hpp"
#include "tagrec/explain/explanation.hpp"
#include "tagrec/fixtures/world.hpp"
#include "tagrec/incremental/pipeline.hpp"
#include "tagrec/judge/metrics.hpp"
#include "tagrec/pipeline/config.hpp"
#include "tagrec/pipeline/pipeline.hpp"
#include "tagrec/pipeline/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tagrec;
using pipeline::Pipeline;
using pipeline::PipelineConfig;

namespace {

struct Globals {
  std::string config;
  std::vector<std::string> overrides;
  bool json = false;
};

PipelineConfig load(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : pipeline::load_config(g.config);
  for (const auto& o : g.overrides) pipeline::apply_override(cfg, o);
  pipeline::validate(cfg);
  return cfg;
}

void emit(const Globals& g, const json& result, const std::string& human) {
  if (g.json) {
    std::cout << json{{"ok", true}, {"result", result}}.dump() << "\n";
  } else {
    std::cout << human;
    if (!human.empty() && human.back() != '\n') std::cout << "\n";
  }
}

std::vector<std::string> target_users(Pipeline& p, const std::string& user, bool all) {
  if (all) return p.dataset().users;
  if (user.empty()) throw ValidationError("user: pass --user or --all");
  return {user};
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int cmd_gen(const Globals& g, const std::string& out, std::size_t users, std::uint64_t seed,
            Timestamp now) {
  fixtures::WorldOptions o;
  o.users = users;
  o.seed = seed;
  o.now = now;
  const auto w = fixtures::generate_world(o);
  fixtures::write_world(w, out);
  emit(g,
       {{"dir", out}, {"users", w.users.size()}, {"items", w.items.size()},
        {"events", w.events.size()}, {"eval", w.eval.size()}, {"now", w.now}},
       fmt::format("wrote {} users, {} items, {} events to {}", w.users.size(), w.items.size(),
                   w.events.size(), out));
  return 0;
}

int cmd_ingest(const Globals& g, const std::string& store, const std::string& input) {
  events::EventStore s{fs::path(store)};
  events::IngestReport r;
  if (input == "-") {
    r = s.ingest(std::cin);
  } else {
    std::ifstream in(input);
    if (!in) throw IoError("cannot open " + input);
    r = s.ingest(in);
  }
  json rejects = json::array();
  for (const auto& x : r.rejects) rejects.push_back({{"line", x.line}, {"reason", x.reason}});
  emit(g, {{"accepted", r.accepted}, {"rejects", rejects}},
       fmt::format("accepted {}, rejected {}", r.accepted, r.rejects.size()));
  return 0;
}

int cmd_compress(const Globals& g, const std::string& user) {
  Pipeline p(load(g));
  const auto c = p.compressed(user);
  emit(g, {{"user_id", user}, {"tokens", c.token_count}, {"groups", c.groups.size()},
           {"truncated", c.truncated}, {"rendered", c.rendered}},
       c.rendered);
  return 0;
}

int cmd_mine(const Globals& g, const std::string& user, bool all) {
  Pipeline p(load(g));
  json out = json::array();
  std::string human;
  for (const auto& u : target_users(p, user, all)) {
    const auto prof = p.profile(u);
    out.push_back(mining::to_json(prof));
    human += fmt::format("{}: {}\n", u, text::join(prof.labels(), ", "));
  }
  emit(g, out, human);
  return 0;
}

int cmd_predict(const Globals& g, const std::string& user, bool all) {
  Pipeline p(load(g));
  json out = json::array();
  std::string human;
  for (const auto& u : target_users(p, user, all)) {
    const auto s = p.tag_set(u);
    out.push_back(tagging::to_json(s));
    human += fmt::format("{}: {} tags\n", u, s.triplets.size());
  }
  emit(g, out, human);
  return 0;
}

int cmd_train(const Globals& g) {
  Pipeline p(load(g));
  const auto r = p.retrain();
  const double drop = r.initial_loss > 0 ? 1.0 - r.final_loss / r.initial_loss : 0.0;
  emit(g,
       {{"checkpoint", p.paths().model.string()}, {"steps", r.steps},
        {"positives", r.positives}, {"initial_loss", r.initial_loss},
        {"final_loss", r.final_loss}, {"reduction", drop}},
       fmt::format("trained {} steps: loss {:.4f} -> {:.4f} ({:.1f}% lower), saved {}", r.steps,
                   r.initial_loss, r.final_loss, 100 * drop, p.paths().model.string()));
  return 0;
}

int cmd_retrieve(const Globals& g, const std::string& user, std::size_t k, bool no_tags) {
  Pipeline p(load(g));
  const auto r = p.retrieve(user, k == 0 ? p.config().top_k : k, !no_tags);
  json hits = json::array();
  std::string human;
  for (const auto& h : r.hits) {
    hits.push_back({{"item_id", h.item_id}, {"score", h.score}});
    human += fmt::format("{}\t{:.6f}\n", h.item_id, h.score);
  }
  emit(g, {{"user_id", user}, {"query_tags", r.query_tags}, {"hits", hits}}, human);
  return 0;
}

int cmd_build_explanations(const Globals& g, const std::string& profiles_arg,
                           const std::string& catalog_arg, const std::string& overrides_arg) {
  Pipeline p(load(g));
  fs::path profiles_path = profiles_arg.empty() ? p.paths().profiles : fs::path(profiles_arg);
  if (fs::is_directory(profiles_path)) profiles_path /= "profiles.jsonl";
  const auto profiles = mining::load_profiles(profiles_path);
  if (profiles.empty()) throw NotFoundError("no profiles in " + profiles_path.string());
  std::optional<retrieval::Catalog> catalog;
  if (!catalog_arg.empty()) catalog = retrieval::load_catalog(catalog_arg);
  const auto& cat = catalog ? *catalog : p.dataset().catalog;
  explain::InterestLinks overrides;
  if (!overrides_arg.empty()) overrides = explain::load_link_overrides(overrides_arg);
  const auto links = explain::link_interests(
      tagging::load_tag_sets(p.paths().tags),
      [&](const std::string& tag) { return p.category_of(tag); }, overrides);
  const auto pairs = explain::pair_candidates(profiles, links, cat);
  const auto r = p.build_explanations(pairs.pairs, catalog ? &*catalog : nullptr);
  json failed = json::array();
  for (const auto& f : r.failed) failed.push_back({{"interest", f.interest}, {"item_id", f.item_id}});
  emit(g,
       {{"pairs", pairs.pairs.size()}, {"unlinked", pairs.unlinked},
        {"generated", r.generated}, {"skipped_existing", r.skipped_existing},
        {"passed", r.passed}, {"flagged", r.flagged}, {"unscreened", r.unscreened},
        {"failed", failed}, {"table", p.paths().explanations.string()}},
       fmt::format("{} pairs: {} generated, {} already present, {} passed, {} flagged, {} failed; "
                   "{} interests without a category",
                   pairs.pairs.size(), r.generated, r.skipped_existing, r.passed, r.flagged,
                   r.failed.size(), pairs.unlinked.size()));
  return 0;
}

int cmd_explain(const Globals& g, const std::string& user, const std::string& item_id) {
  Pipeline p(load(g));
  const auto prof = mining::find_profile(p.paths().profiles, user);
  if (!prof) throw NotFoundError(fmt::format("no stored profile for '{}'", user));
  const auto& cat = p.dataset().catalog;
  const std::size_t idx = cat.find(item_id);
  if (idx == retrieval::Catalog::npos) throw NotFoundError(fmt::format("unknown item '{}'", item_id));
  const auto e = explain::lookup(p.explanations(), cat.at(idx), *prof);
  emit(g, explain::to_json(e),
       fmt::format("{}{}", e.explanation, e.fallback ? " (fallback)" : ""));
  return 0;
}

int cmd_il(const Globals& g, const std::string& out_arg, const std::string& completer_kind,
           bool global_cap) {
  Pipeline p(load(g));
  const auto& cfg = p.config();
  const fs::path out = out_arg.empty() ? p.paths().work / "il" : fs::path(out_arg);
  const auto records = incremental::select_feedback(p.events(), p.now(), cfg.window_days);
  const auto history = incremental::select_feedback(p.events(), p.now(), 100000);
  incremental::RuleRecordJudge judge(history, p.now());
  const auto purified = incremental::purify(records, judge);

  std::map<std::string, mining::InterestProfile> profiles;
  for (auto& pr : mining::load_profiles(p.paths().profiles)) profiles[pr.user_id] = pr;
  const incremental::ProfileSource source = [&](std::string_view u) {
    auto it = profiles.find(std::string(u));
    return it == profiles.end() ? nullptr : &it->second;
  };
  std::map<std::string, std::vector<incremental::FeedbackRecord>> by_user;
  for (const auto& r : history) by_user[r.user_id].push_back(r);
  std::unique_ptr<incremental::InterestCompleter> completer;
  if (completer_kind == "llm") {
    completer = std::make_unique<incremental::LlmCompleter>(p.gateway(), &p.users(), &by_user,
                                                            cfg.seed);
  } else if (completer_kind == "taxonomy") {
    completer = std::make_unique<incremental::TaxonomyCompleter>(p.category_interests());
  } else {
    throw ConfigError("completer: must be taxonomy or llm");
  }
  const auto completed = incremental::complete(purified.kept, source, *completer);
  incremental::BalanceConfig bc;
  bc.per_user_cap = cfg.per_user_cap;
  bc.per_cate_cap = cfg.per_cate_cap;
  bc.global_cate_cap = global_cap;
  bc.seed = cfg.seed;
  const auto balanced = incremental::balance(
      completed.samples, bc, [&](const std::string& tag) { return p.category_of(tag); });

  fs::create_directories(out);
  std::string samples, sft, review, dropped;
  for (const auto& s : balanced) samples += incremental::to_json(s).dump() + "\n";
  for (const auto& j : incremental::export_sft(balanced, p.users())) sft += j.dump() + "\n";
  for (const auto& r : purified.review) review += incremental::to_json(r).dump() + "\n";
  for (const auto& d : purified.dropped) {
    json j = incremental::to_json(d.record);
    j["reason"] = std::string(incremental::to_string(d.reason));
    dropped += j.dump() + "\n";
  }
  io::write_file_atomic(out / "samples.jsonl", samples);
  io::write_file_atomic(out / "sft.jsonl", sft);
  io::write_file_atomic(out / "review.jsonl", review);
  io::write_file_atomic(out / "dropped.jsonl", dropped);
  const json report = {{"window_records", records.size()},  {"kept", purified.kept.size()},
                       {"dropped", purified.dropped.size()}, {"review", purified.review.size()},
                       {"completed", completed.samples.size()},
                       {"completion_skipped", completed.skipped},
                       {"balanced", balanced.size()},        {"out", out.string()}};
  io::write_file_atomic(out / "report.json", report.dump(2) + "\n");
  emit(g, report,
       fmt::format("{} records: kept {}, dropped {}, review {}; {} samples after balancing in {}",
                   records.size(), purified.kept.size(), purified.dropped.size(),
                   purified.review.size(), balanced.size(), out.string()));
  return 0;
}

int cmd_eval_hr(const Globals& g, std::size_t k, bool generate, const std::string& predictions) {
  Pipeline p(load(g));
  const auto eval = incremental::load_eval(p.paths().eval);
  std::map<std::string, std::vector<std::string>> pred;
  const fs::path src = predictions.empty() ? p.paths().tags : fs::path(predictions);
  for (const auto& s : tagging::load_tag_sets(src)) pred[s.user_id] = s.tags();
  if (generate) {
    for (const auto& c : eval) {
      if (!pred.count(c.user_id)) pred[c.user_id] = p.tag_set(c.user_id).tags();
    }
  }
  const auto r = incremental::hr_at_k(eval, pred, [&](const std::string& t) { return p.category_of(t); },
                                      k == 0 ? p.config().hr_k : k);
  emit(g,
       {{"hr", r.hr}, {"k", k == 0 ? p.config().hr_k : k}, {"users", r.users}, {"hits", r.hits},
        {"missing_predictions", r.missing_predictions}},
       fmt::format("HR@{} = {:.4f} ({} of {} users; {} without predictions)",
                   k == 0 ? p.config().hr_k : k, r.hr, r.hits, r.users, r.missing_predictions));
  return 0;
}

int cmd_judge_eval(const Globals& g, const std::string& rebalance_out) {
  const auto cfg = load(g);
  judge::JudgeBuffer buf(pipeline::paths_for(cfg).buffer);
  judge::DriftConfig dc;
  dc.delta = cfg.judge_delta;
  json report = judge::metrics_report(buf.samples(), dc, cfg.judge_gate);
  if (!rebalance_out.empty()) {
    judge::RebalanceConfig rc;
    rc.seed = cfg.seed;
    const auto r = judge::rebalance(buf.samples(), rc);
    std::string body;
    for (const auto& j : judge::export_judge_training(r.samples)) body += j.dump() + "\n";
    io::write_file_atomic(rebalance_out, body);
    report["rebalance"] = {{"samples", r.samples.size()}, {"warnings", r.warnings},
                           {"out", rebalance_out}};
  }
  emit(g, report, report.dump(2));
  return 0;
}

int cmd_serve(const Globals& g, const std::string& bind) {
  auto cfg = load(g);
  if (!bind.empty()) cfg.bind = bind;
  const auto [host, port] = pipeline::parse_bind(cfg.bind);
  Pipeline p(cfg);
  pipeline::Service svc(p.buffer(), &p, cfg);
  const int bound = svc.bind(host, port);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    svc.stop();
  });
  if (g.json) {
    std::cout << json{{"ok", true}, {"result", {{"host", host}, {"port", bound}}}}.dump() << "\n";
  } else {
    std::cout << fmt::format("listening on {}:{}", host, bound) << std::endl;
  }
  std::cout.flush();
  svc.listen();
  g_stop = true;
  watcher.join();
  return 0;
}

int cmd_run(const Globals& g, const std::string& user, std::size_t k) {
  Pipeline p(load(g));
  const auto b = p.run(user, k == 0 ? std::nullopt : std::optional<std::size_t>(k));
  std::string human;
  for (const auto& i : b.items) {
    human += fmt::format("{}\t{:.6f}\t{}{}\n", i.item_id, i.score, i.explanation,
                         i.fallback ? " (fallback)" : "");
  }
  emit(g, pipeline::to_json(b), human);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tagrec: tag-driven recommendation pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config, "pipeline config file (key = value)");
  app.add_option("-s,--set", g.overrides, "config override key=value (repeatable)");
  app.add_flag("--json", g.json, "machine-readable output");

  std::function<int()> action;

  std::string out, user, item, store, input, profiles, catalog, overrides, completer = "taxonomy",
      predictions, rebalance_out, bind;
  std::size_t users = 60, k = 0;
  std::uint64_t seed = 7;
  Timestamp now = 0;
  bool all = false, no_tags = false, generate = false, global_cap = false;

  auto* gen = app.add_subcommand("gen-synthetic", "write the synthetic dataset");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--users", users, "number of users");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--now", now, "reference time (unix seconds)");
  gen->callback([&] { action = [&] { return cmd_gen(g, out, users, seed, now); }; });

  auto* ingest = app.add_subcommand("ingest", "append JSONL events to an event store");
  ingest->add_option("--store", store, "store directory")->required();
  ingest->add_option("--input", input, "JSONL file or - for stdin")->required();
  ingest->callback([&] { action = [&] { return cmd_ingest(g, store, input); }; });

  auto* comp = app.add_subcommand("compress", "render a user's compressed behavior log");
  comp->add_option("--user", user)->required();
  comp->callback([&] { action = [&] { return cmd_compress(g, user); }; });

  auto* mine = app.add_subcommand("mine-interests", "mine and screen interest profiles");
  mine->add_option("--user", user);
  mine->add_flag("--all", all, "every user in the dataset");
  mine->callback([&] { action = [&] { return cmd_mine(g, user, all); }; });

  auto* pred = app.add_subcommand("predict-tags", "predict, validate and screen item tags");
  pred->add_option("--user", user);
  pred->add_flag("--all", all, "every user in the dataset");
  pred->callback([&] { action = [&] { return cmd_predict(g, user, all); }; });

  auto* train = app.add_subcommand("train-retrieval", "train the tri-tower model");
  train->callback([&] { action = [&] { return cmd_train(g); }; });

  auto* ret = app.add_subcommand("retrieve", "top-k items for a user");
  ret->add_option("--user", user)->required();
  ret->add_option("--k", k, "number of items (default top_k)");
  ret->add_flag("--no-tags", no_tags, "collaborative score only");
  ret->callback([&] { action = [&] { return cmd_retrieve(g, user, k, no_tags); }; });

  auto* bex = app.add_subcommand("build-explanations", "offline explanation table production");
  bex->add_option("--profiles", profiles, "profiles.jsonl or its directory");
  bex->add_option("--catalog", catalog, "catalog.jsonl");
  bex->add_option("--overrides", overrides, "interest -> categories JSON");
  bex->callback(
      [&] { action = [&] { return cmd_build_explanations(g, profiles, catalog, overrides); }; });

  auto* ex = app.add_subcommand("explain", "look up the explanation for a user and item");
  ex->add_option("--user", user)->required();
  ex->add_option("--item", item)->required();
  ex->callback([&] { action = [&] { return cmd_explain(g, user, item); }; });

  auto* il = app.add_subcommand("il-pipeline", "curate fine-tuning samples from recent feedback");
  il->add_option("--out", out, "output directory (default <work>/il)");
  il->add_option("--completer", completer, "taxonomy | llm");
  il->add_flag("--global-cap", global_cap, "cap samples per category across users");
  il->callback([&] { action = [&] { return cmd_il(g, out, completer, global_cap); }; });

  auto* hr = app.add_subcommand("eval-hr", "HR@k of predicted tags against eval.jsonl");
  hr->add_option("--k", k, "cutoff (default hr_k)");
  hr->add_option("--predictions", predictions, "tag sets JSONL (default <work>/tags.jsonl)");
  hr->add_flag("--generate", generate, "predict tags for eval users without a set");
  hr->callback([&] { action = [&] { return cmd_eval_hr(g, k, generate, predictions); }; });

  auto* je = app.add_subcommand("judge-eval", "judge agreement, drift and deployment gate");
  je->add_option("--rebalance-out", rebalance_out, "write the rebalanced judge training set");
  je->callback([&] { action = [&] { return cmd_judge_eval(g, rebalance_out); }; });

  auto* serve = app.add_subcommand("serve", "HTTP API for the annotation console");
  serve->add_option("--bind", bind, "host:port (default from config)");
  serve->callback([&] { action = [&] { return cmd_serve(g, bind); }; });

  auto* run = app.add_subcommand("run-pipeline", "full loop for one user");
  run->alias("run");
  run->add_option("--user", user)->required();
  run->add_option("--k", k, "number of items (default top_k)");
  run->callback([&] { action = [&] { return cmd_run(g, user, k); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    return action();
  } catch (const Error& e) {
    json err = {{"kind", e.kind()}, {"message", e.what()}};
    if (const auto* s = dynamic_cast<const pipeline::StageError*>(&e)) {
      err["stage"] = s->stage();
      err["cause"] = s->cause_kind();
    }
    if (g.json) {
      std::cout << json{{"ok", false}, {"error", err}}.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  } catch (const std::exception& e) {
    if (g.json) {
      std::cout << json{{"ok", false}, {"error", {{"kind", "error"}, {"message", e.what()}}}}.dump()
                << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  }
}
