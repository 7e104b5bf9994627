#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "evo/error.hpp"
#include "evo/harness/run.hpp"
#include "evo/harness/suite.hpp"
#include "evo/harness/yaml_json.hpp"

using namespace evo;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Leftover "--key value" / "--key=value" pairs become config overrides.
RunConfig build_config(const std::string& path, const std::vector<std::string>& extras) {
  json j = path.empty() ? RunConfig().to_json() : parse_config_text(slurp(path));
  if (!j.is_object()) throw ConfigError("config must be a mapping");
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    if (key.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + key + "'");
    std::string value;
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("missing value for " + key);
      value = extras[++i];
    }
    apply_override(j, key, value);
  }
  return RunConfig::from_json(j);
}

StoreConfig stored_config(const std::string& dir) {
  const auto meta = std::filesystem::path(dir) / "meta.json";
  if (!std::filesystem::exists(meta)) throw ConfigError("no experience store at " + dir);
  const json m = json::parse(slurp(meta.string()));
  StoreConfig c;
  const json& cfg = m.at("config");
  c.rollup_window = cfg.value("rollup_window", c.rollup_window);
  c.auto_rollup = cfg.value("auto_rollup", c.auto_rollup);
  c.cell_size = cfg.value("cell_size", c.cell_size);
  return c;
}

void emit_report(const Report& r, const std::string& out, bool as_json) {
  if (!out.empty()) r.write(out);
  if (as_json) std::cout << r.to_json().dump(2) << "\n";
  else std::cout << r.to_text();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-evolving agent engine: episodes, sweeps and knowledge tools"};
  app.require_subcommand(1);

  std::string config_path, out_dir, task_id, store_dir, kb_dir, skill_name, doc_id, reason;
  std::uint64_t seed = 1;
  int times = 1, limit = 20;
  bool as_json = false;

  auto* run = app.add_subcommand("run", "Run a single episode");
  run->add_option("-c,--config", config_path, "Run config (YAML or JSON)");
  run->add_option("-t,--task", task_id, "Task id")->required();
  run->add_option("-s,--seed", seed, "World seed");
  run->add_option("-o,--out", out_dir, "Directory for the result and event log");
  run->allow_extras();

  auto* eval = app.add_subcommand("eval", "Sweep tasks x seeds and report success rates");
  eval->add_option("-c,--config", config_path, "Run config (YAML or JSON)");
  eval->add_option("-o,--out", out_dir, "Directory for report.json and report.txt");
  eval->add_flag("--json", as_json, "Print the JSON report");
  eval->allow_extras();

  auto* curriculum = app.add_subcommand("curriculum", "Two-pool curriculum run (pretrain_freeze, mixed_sampling)");
  curriculum->add_option("-c,--config", config_path, "Run config (YAML or JSON)");
  curriculum->add_option("-o,--out", out_dir, "Directory for report.json and report.txt");
  curriculum->add_flag("--json", as_json, "Print the JSON report");
  curriculum->allow_extras();

  auto* inspect = app.add_subcommand("inspect-store", "Summarize an experience store");
  inspect->add_option("store", store_dir, "Store directory")->required();
  inspect->add_option("--doc", doc_id, "Print one document");
  inspect->add_option("--reason", reason, "Only entries with this failure reason");
  inspect->add_option("-n,--limit", limit, "Entries to list");

  auto* exportk = app.add_subcommand("export-knowledge", "Export a knowledge base as JSON and YAML cards");
  exportk->add_option("kb", kb_dir, "Knowledge directory")->required();
  exportk->add_option("-o,--out", out_dir, "Target directory; prints JSON when omitted");

  auto* replay = app.add_subcommand("replay", "Re-execute a stored skill");
  replay->add_option("kb", kb_dir, "Knowledge directory")->required();
  replay->add_option("--skill", skill_name, "Skill name (default: the skill for --task, else the first)");
  replay->add_option("-t,--task", task_id, "Task whose init commands set up the world");
  replay->add_option("-s,--seed", seed, "World seed");
  replay->add_option("--times", times, "Replays on consecutive seeds")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = build_config(config_path, run->remaining());
      auto ctx = RunContext::from_config(cfg);
      const auto r = run_single(cfg, ctx, task_id, seed);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / "result.json") << r.to_json().dump(2) << "\n";
        r.write_event_log(std::filesystem::path(out_dir) / (r.episode_id + ".jsonl"));
      }
      std::cout << r.to_json().dump(2) << "\n";
      return r.success ? 0 : 2;
    }
    if (*eval) {
      const auto cfg = build_config(config_path, eval->remaining());
      emit_report(run_eval(cfg), out_dir, as_json);
      return 0;
    }
    if (*curriculum) {
      const auto cfg = build_config(config_path, curriculum->remaining());
      emit_report(curriculum_run(cfg), out_dir, as_json);
      return 0;
    }
    if (*inspect) {
      auto store = ExperienceStore::open(store_dir, stored_config(store_dir));
      if (!doc_id.empty()) {
        std::cout << json(store->get_document(doc_id)).dump(2) << "\n";
        return 0;
      }
      const auto entries = store->all_entries();
      std::map<std::string, int> reasons;
      int ok = 0;
      for (const auto& e : entries) {
        if (e.outcome) ++ok;
        else reasons[e.failure_reason ? std::string(to_string(*e.failure_reason)) : "?"]++;
      }
      std::cout << "documents " << store->size() << "  live " << store->live_size() << "  summaries "
                << store->summaries().size() << "  successes " << ok << "\n";
      for (const auto& [k, v] : reasons) std::cout << "  " << k << " " << v << "\n";
      std::vector<IndexEntry> listed = entries;
      if (!reason.empty()) {
        QueryFilter f;
        f.include_rolled_up = true;
        std::string upper = reason;
        std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
        f.reason = parse_failure_reason(upper);
        if (!f.reason) throw ConfigError("unknown failure reason '" + reason + "'");
        listed = store->query(f, entries.size());
      }
      const auto n = std::min(listed.size(), static_cast<std::size_t>(std::max(0, limit)));
      for (std::size_t i = listed.size() - n; i < listed.size(); ++i) std::cout << json(listed[i]).dump() << "\n";
      return 0;
    }
    if (*exportk) {
      const auto kb = KnowledgeBase::load(kb_dir);
      if (out_dir.empty()) std::cout << kb.to_json().dump(2) << "\n";
      else kb.save(out_dir);
      return 0;
    }
    if (*replay) {
      const auto kb = KnowledgeBase::load(kb_dir);
      if (kb.skills().empty()) throw ConfigError("no skills in " + kb_dir);
      std::vector<std::string> init;
      const Skill* skill = nullptr;
      if (!task_id.empty()) {
        const auto& task = find_task(standard_suite(), task_id);
        init = task.init_commands;
        if (skill_name.empty())
          for (const auto& k : kb.skills())
            if (k.goal == task.goal) skill = &k;
      }
      if (!skill) skill = skill_name.empty() ? &kb.skills().front() : kb.find_skill(skill_name);
      if (!skill) throw ConfigError("no skill named '" + skill_name + "'");
      ControllerConfig cfg;
      auto store = ExperienceStore::in_memory();
      int successes = 0;
      for (int i = 0; i < times; ++i) {
        sim::World w;
        w.reset(seed + static_cast<std::uint64_t>(i), init, "replay");
        for (int k = 0; k < cfg.warmup_steps; ++k) w.step(sim::Action::noop());
        const auto r = replay_skill(*skill, w, *store, cfg, "replay_" + std::to_string(i));
        successes += r.success;
        std::cout << json{{"seed", seed + static_cast<std::uint64_t>(i)},
                          {"skill", skill->name},
                          {"preconditions_met", r.preconditions_met},
                          {"success", r.success},
                          {"attempts", r.attempts.size()},
                          {"steps", r.steps}}
                         .dump()
                  << "\n";
      }
      return successes == times ? 0 : 2;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
