#include "evo/harness/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "evo/error.hpp"
#include "evo/harness/suite.hpp"
#include "evo/harness/yaml_json.hpp"
#include "evo/prompt/prompt.hpp"

namespace evo {

namespace {

constexpr int kCheckpointPercents[] = {20, 40, 60, 80, 100};

std::string episode_name(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, n);
  return buf;
}

std::vector<std::uint64_t> seed_range(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> v;
  for (auto s = lo; s <= hi; ++s) v.push_back(s);
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

json parse_scalar(const std::string& v) {
  try {
    return json::parse(v);
  } catch (const json::exception&) {
    return v;
  }
}

// "1..5", "1,2,7" or a JSON array.
json parse_list(const std::string& v) {
  json j = parse_scalar(v);
  if (j.is_array()) return j;
  json out = json::array();
  for (const auto& part : split(v, ',')) {
    const auto dots = part.find("..");
    if (dots != std::string::npos) {
      try {
        const long lo = std::stol(part.substr(0, dots)), hi = std::stol(part.substr(dots + 2));
        if (hi < lo || hi - lo > 100000) throw ConfigError("bad range '" + part + "'");
        for (long x = lo; x <= hi; ++x) out.push_back(x);
      } catch (const std::logic_error&) {
        throw ConfigError("bad range '" + part + "'");
      }
    } else {
      out.push_back(parse_scalar(part));
    }
  }
  return out;
}

std::vector<TaskSpec> base_suite(const RunConfig& cfg) {
  return cfg.suite_path.empty() ? standard_suite() : load_suite(cfg.suite_path);
}

std::vector<TaskSpec> prepared(const RunConfig& cfg, const std::vector<TaskSpec>& suite,
                               const std::vector<std::string>& names) {
  auto tasks = resolve_tasks(suite, names);
  if (cfg.hazard)
    for (auto& t : tasks) t = with_hazard(t);
  return tasks;
}

struct Job {
  const TaskSpec* task;
  std::uint64_t seed;
  std::string phase;
  bool frozen;
};

std::vector<Job> sweep(const std::vector<TaskSpec>& tasks, const std::vector<std::uint64_t>& seeds,
                       const std::string& phase, bool frozen) {
  std::vector<Job> out;
  for (auto seed : seeds)
    for (const auto& t : tasks) out.push_back({&t, seed, phase, frozen});
  return out;
}

std::vector<Job> cycled(const std::vector<Job>& base, int n) {
  if (n <= 0 || base.empty()) return base;
  std::vector<Job> out;
  for (int i = 0; i < n; ++i) out.push_back(base[static_cast<std::size_t>(i) % base.size()]);
  return out;
}

EpisodeRow row_of(const EpisodeResult& r, const TaskSpec& t, const std::string& phase, const KnowledgeBase& kb) {
  EpisodeRow row;
  row.episode_id = r.episode_id;
  row.task_id = t.task_id;
  row.group = t.group;
  row.phase = phase;
  row.seed = r.seed;
  row.success = r.success;
  row.replans = r.replans;
  row.attempts = r.attempts;
  row.steps = r.steps;
  if (r.failure_kind) row.failure = std::string(to_string(*r.failure_kind));
  row.kb_version = kb.version();
  return row;
}

EpisodeRow play(const RunConfig& cfg, RunContext& ctx, const TaskSpec& t, std::uint64_t seed,
                const std::string& episode_id, const std::string& phase, bool frozen, KnowledgeBase& kb,
                ExperienceStore& store) {
  ControllerConfig cc = cfg.controller;
  cc.freeze_kb = cc.freeze_kb || frozen;
  try {
    auto r = run_episode(t, seed, *ctx.planner, kb, store, cc, episode_id);
    if (!cfg.log_dir.empty()) r.write_event_log(std::filesystem::path(cfg.log_dir) / (episode_id + ".jsonl"));
    return row_of(r, t, phase, kb);
  } catch (const std::exception& e) {
    EpisodeRow row;
    row.episode_id = episode_id;
    row.task_id = t.task_id;
    row.group = t.group;
    row.phase = phase;
    row.seed = seed;
    row.failure = std::string("crash: ") + e.what();
    row.kb_version = kb.version();
    return row;
  }
}

// Held-out evaluation against a copy of the knowledge and a scratch store, so
// training state is untouched.
Checkpoint evaluate(const RunConfig& cfg, RunContext& ctx, const std::vector<TaskSpec>& targets, int percent,
                    int after, std::vector<EpisodeRow>& rows) {
  Checkpoint cp;
  cp.percent = percent;
  cp.after_episode = after;
  KnowledgeBase kb = ctx.kb;
  auto scratch = ExperienceStore::in_memory(cfg.store);
  const std::string phase = "eval@" + std::to_string(percent);
  for (auto seed : cfg.eval_seeds)
    for (const auto& t : targets) {
      const auto id = "ev" + std::to_string(percent) + "_" + std::to_string(rows.size() + 1);
      auto row = play(cfg, ctx, t, seed, id, phase, true, kb, *scratch);
      ++cp.runs;
      cp.successes += row.success;
      rows.push_back(std::move(row));
    }
  return cp;
}

Report execute(const RunConfig& cfg, RunContext& ctx, const std::vector<Job>& jobs,
               const std::vector<TaskSpec>& targets) {
  Report rep;
  rep.config = cfg.to_json();
  rep.kb_version_start = ctx.kb.version();
  // Short runs can map several percentages to one episode; it is evaluated once.
  std::map<int, std::vector<int>> marks;  // episode count -> percents
  if (cfg.checkpoints && !cfg.eval_seeds.empty())
    for (int p : kCheckpointPercents)
      marks[static_cast<int>(std::ceil(double(jobs.size()) * p / 100.0))].push_back(p);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    rep.training.push_back(
        play(cfg, ctx, *j.task, j.seed, episode_name("ep", i + 1), j.phase, j.frozen, ctx.kb, *ctx.store));
    if (auto m = marks.find(static_cast<int>(i + 1)); m != marks.end()) {
      const Checkpoint cp = evaluate(cfg, ctx, targets, m->second.front(), m->first, rep.evaluation);
      for (int p : m->second) {
        rep.checkpoints.push_back(cp);
        rep.checkpoints.back().percent = p;
      }
    }
  }
  rep.kb_version_end = ctx.kb.version();
  rep.kb_skills = ctx.kb.skills().size();
  rep.kb_guardrails = ctx.kb.guardrails().size();
  if (!cfg.kb_out.empty()) ctx.kb.save(cfg.kb_out);
  return rep;
}

struct Tally {
  int runs = 0, successes = 0, replans = 0;
  void add(const EpisodeRow& r) {
    ++runs;
    successes += r.success;
    replans += r.replans;
  }
  json to_json() const {
    return {{"runs", runs},
            {"successes", successes},
            {"sr", runs ? double(successes) / runs : 0.0},
            {"replans", replans},
            {"replans_mean", runs ? double(replans) / runs : 0.0}};
  }
};

json summarize(const std::vector<EpisodeRow>& rows) {
  std::map<std::string, Tally> tasks, groups, phases;
  std::map<std::string, std::string> group_of;
  std::vector<std::string> task_order, group_order;
  std::map<std::string, int> failures;
  Tally all;
  for (const auto& r : rows) {
    if (!tasks.count(r.task_id)) task_order.push_back(r.task_id);
    if (!groups.count(r.group)) group_order.push_back(r.group);
    tasks[r.task_id].add(r);
    group_of[r.task_id] = r.group;
    groups[r.group].add(r);
    phases[r.phase].add(r);
    all.add(r);
    if (!r.success) ++failures[r.failure.rfind("crash", 0) == 0 ? "crash" : r.failure];
  }
  json t = json::array(), g = json::array();
  for (const auto& id : task_order) {
    json row = tasks[id].to_json();
    row["task_id"] = id;
    row["group"] = group_of[id];
    t.push_back(row);
  }
  for (const auto& id : group_order) {
    json row = groups[id].to_json();
    row["group"] = id;
    g.push_back(row);
  }
  json p = json::object();
  for (const auto& [k, v] : phases) p[k] = v.to_json();
  return {{"overall", all.to_json()}, {"per_task", t}, {"per_group", g}, {"per_phase", p}, {"failures", failures}};
}

json row_json(const EpisodeRow& r) {
  return {{"episode_id", r.episode_id}, {"task_id", r.task_id}, {"group", r.group},     {"phase", r.phase},
          {"seed", r.seed},             {"success", r.success},  {"replans", r.replans}, {"attempts", r.attempts},
          {"steps", r.steps},           {"failure", r.failure},  {"kb_version", r.kb_version}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::cold_start: return "cold_start";
    case Strategy::self_learning: return "self_learning";
    case Strategy::pretrain_freeze: return "pretrain_freeze";
    case Strategy::mixed_sampling: return "mixed_sampling";
  }
  return "?";
}

Strategy parse_strategy(const std::string& s) {
  for (auto x : {Strategy::cold_start, Strategy::self_learning, Strategy::pretrain_freeze, Strategy::mixed_sampling})
    if (to_string(x) == s) return x;
  throw ConfigError("unknown strategy '" + s + "'");
}

RunConfig::RunConfig() : seeds(seed_range(1, 10)), eval_seeds(seed_range(1001, 1005)) {}

void RunConfig::check() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (episodes < 0) throw ConfigError("episodes must be >= 0");
  if (planner.backend != "scripted" && planner.backend != "external")
    throw ConfigError("planner backend must be scripted or external");
  if (strategy == Strategy::pretrain_freeze || strategy == Strategy::mixed_sampling) {
    if (easy_pool.empty() || hard_pool.empty())
      throw ConfigError(std::string(to_string(strategy)) + " needs both easy_pool and hard_pool");
  }
  if (checkpoints)
    for (auto s : eval_seeds)
      if (std::find(seeds.begin(), seeds.end(), s) != seeds.end())
        throw ConfigError("eval seed " + std::to_string(s) + " is also a training seed");
  controller.check();
  if (store.rollup_window < 2) throw ConfigError("rollup window must be >= 2");
}

json RunConfig::to_json() const {
  return json{{"seeds", seeds},
              {"eval_seeds", eval_seeds},
              {"strategy", to_string(strategy)},
              {"tasks", tasks},
              {"easy_pool", easy_pool},
              {"hard_pool", hard_pool},
              {"suite", suite_path},
              {"hazard", hazard},
              {"episodes", episodes},
              {"checkpoints", checkpoints},
              {"planner",
               {{"backend", planner.backend},
                {"endpoint", planner.endpoint.to_json()},
                {"faults", planner.faults.to_json()},
                {"templates_dir", planner.templates_dir}}},
              {"controller", controller.to_json()},
              {"store", store.to_json()},
              {"store_dir", store_dir},
              {"kb_in", kb_in},
              {"kb_out", kb_out},
              {"log_dir", log_dir}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a mapping");
  static const std::set<std::string> known = {"seeds",   "eval_seeds", "strategy", "tasks",       "easy_pool",
                                              "hard_pool", "suite",     "hazard",   "episodes",    "checkpoints",
                                              "planner", "controller", "store",    "store_dir",   "kb_in",
                                              "kb_out",  "log_dir"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown run config key '" + k + "'");
  RunConfig c;
  try {
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("eval_seeds")) c.eval_seeds = j.at("eval_seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    c.tasks = j.value("tasks", c.tasks);
    c.easy_pool = j.value("easy_pool", c.easy_pool);
    c.hard_pool = j.value("hard_pool", c.hard_pool);
    c.suite_path = j.value("suite", c.suite_path);
    c.hazard = j.value("hazard", c.hazard);
    c.episodes = j.value("episodes", c.episodes);
    c.checkpoints = j.value("checkpoints", c.checkpoints);
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      c.planner.backend = p.value("backend", c.planner.backend);
      if (p.contains("endpoint")) c.planner.endpoint = EndpointConfig::from_json(p.at("endpoint"));
      if (p.contains("faults")) c.planner.faults = FaultConfig::from_json(p.at("faults"));
      c.planner.templates_dir = p.value("templates_dir", c.planner.templates_dir);
    }
    if (j.contains("controller")) c.controller = ControllerConfig::from_json(j.at("controller"));
    if (j.contains("store")) {
      const auto& s = j.at("store");
      c.store.rollup_window = s.value("rollup_window", c.store.rollup_window);
      c.store.auto_rollup = s.value("auto_rollup", c.store.auto_rollup);
      c.store.cell_size = s.value("cell_size", c.store.cell_size);
    }
    c.store_dir = j.value("store_dir", c.store_dir);
    c.kb_in = j.value("kb_in", c.kb_in);
    c.kb_out = j.value("kb_out", c.kb_out);
    c.log_dir = j.value("log_dir", c.log_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  c.check();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(parse_config_text(ss.str()));
}

void apply_override(json& config, const std::string& key_in, const std::string& value) {
  static const std::map<std::string, std::string> aliases = {
      {"K", "controller.recall.k"},     {"w", "store.rollup_window"},
      {"alpha", "controller.recall.alpha"}, {"beta", "controller.recall.beta"},
      {"ablation", "controller.ablations"}, {"fault_rate", "planner.faults.rate"},
      {"backend", "planner.backend"},   {"model", "planner.endpoint.model"},
      {"url", "planner.endpoint.url"}};
  std::string key = key_in;
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  if (auto a = aliases.find(key); a != aliases.end()) key = a->second;
  for (auto& ch : key)
    if (ch == '-') ch = '_';
  if (auto a = aliases.find(key); a != aliases.end()) key = a->second;

  const json defaults = RunConfig().to_json();
  auto pointer = [](const std::string& dotted) {
    std::string p;
    for (const auto& part : split(dotted, '.')) p += "/" + part;
    return json::json_pointer(p);
  };
  std::optional<json::json_pointer> target;
  if (key.find('.') != std::string::npos) {
    if (defaults.contains(pointer(key))) target = pointer(key);
  } else {
    for (const char* section : {"", "controller", "controller.recall", "store", "planner", "planner.faults",
                                "planner.endpoint"}) {
      const std::string full = *section ? std::string(section) + "." + key : key;
      if (defaults.contains(pointer(full))) {
        target = pointer(full);
        break;
      }
    }
  }
  if (!target) throw ConfigError("unknown setting '" + key_in + "'");
  const json& like = defaults.at(*target);
  json v = like.is_array() ? parse_list(value) : parse_scalar(value);
  if (like.is_string() && !v.is_string()) v = value;
  config[*target] = v;
}

std::unique_ptr<Planner> make_planner(const PlannerSettings& s) {
  if (s.backend == "scripted") return std::make_unique<ScriptedPlanner>(s.faults);
  if (s.backend == "external") {
    const char* token = std::getenv(s.endpoint.api_key_env.c_str());
    if (!token || !*token)
      throw ConfigError("external planner needs the " + s.endpoint.api_key_env + " environment variable");
    return std::make_unique<ExternalPlanner>(
        s.endpoint, s.templates_dir.empty() ? TemplateSet::embedded() : TemplateSet::with_overrides(s.templates_dir));
  }
  throw ConfigError("unknown planner backend '" + s.backend + "'");
}

std::vector<TaskSpec> resolve_tasks(const std::vector<TaskSpec>& suite, const std::vector<std::string>& names) {
  if (names.empty()) return suite;
  std::set<std::string> wanted;
  for (const auto& n : names) {
    bool hit = false;
    for (const auto& t : suite)
      if (t.task_id == n || t.group == n) {
        wanted.insert(t.task_id);
        hit = true;
      }
    if (!hit) throw ConfigError("no task or group named '" + n + "'");
  }
  std::vector<TaskSpec> out;
  for (const auto& t : suite)
    if (wanted.count(t.task_id)) out.push_back(t);
  return out;
}

RunContext RunContext::from_config(const RunConfig& cfg) {
  cfg.check();
  RunContext ctx;
  ctx.planner = make_planner(cfg.planner);
  if (!cfg.kb_in.empty()) ctx.kb = KnowledgeBase::load(cfg.kb_in);
  ctx.store = cfg.store_dir.empty() ? ExperienceStore::in_memory(cfg.store) : ExperienceStore::open(cfg.store_dir, cfg.store);
  if (!cfg.log_dir.empty()) std::filesystem::create_directories(cfg.log_dir);
  return ctx;
}

Report run_eval(const RunConfig& cfg) {
  auto ctx = RunContext::from_config(cfg);
  return run_eval(cfg, ctx);
}

Report run_eval(const RunConfig& cfg, RunContext& ctx) {
  if (cfg.strategy == Strategy::pretrain_freeze || cfg.strategy == Strategy::mixed_sampling)
    return curriculum_run(cfg, ctx);
  cfg.check();
  const auto suite = base_suite(cfg);
  const auto tasks = prepared(cfg, suite, cfg.tasks);
  const bool frozen = cfg.strategy == Strategy::cold_start;
  return execute(cfg, ctx, cycled(sweep(tasks, cfg.seeds, "train", frozen), cfg.episodes), tasks);
}

Report curriculum_run(const RunConfig& cfg) {
  auto ctx = RunContext::from_config(cfg);
  return curriculum_run(cfg, ctx);
}

Report curriculum_run(const RunConfig& cfg, RunContext& ctx) {
  cfg.check();
  if (cfg.strategy != Strategy::pretrain_freeze && cfg.strategy != Strategy::mixed_sampling)
    throw ConfigError("curriculum needs strategy pretrain_freeze or mixed_sampling");
  const auto suite = base_suite(cfg);
  const auto easy = prepared(cfg, suite, cfg.easy_pool);
  const auto hard = prepared(cfg, suite, cfg.hard_pool);
  std::vector<Job> jobs;
  if (cfg.strategy == Strategy::pretrain_freeze) {
    const int n1 = cfg.episodes / 2, n2 = cfg.episodes - n1;
    for (auto& j : cycled(sweep(easy, cfg.seeds, "pretrain", false), n1)) jobs.push_back(j);
    for (auto& j : cycled(sweep(hard, cfg.seeds, "target", true), n2)) jobs.push_back(j);
  } else {
    const auto e = sweep(easy, cfg.seeds, "easy", false);
    const auto h = sweep(hard, cfg.seeds, "hard", false);
    const std::size_t n =
        cfg.episodes > 0 ? static_cast<std::size_t>(cfg.episodes) : 2 * std::max(e.size(), h.size());
    for (std::size_t i = 0; i < n; ++i) jobs.push_back(i % 2 == 0 ? e[(i / 2) % e.size()] : h[(i / 2) % h.size()]);
  }
  return execute(cfg, ctx, jobs, hard);
}

EpisodeResult run_single(const RunConfig& cfg, RunContext& ctx, const std::string& task_id, std::uint64_t seed,
                         const std::string& episode_id) {
  auto tasks = prepared(cfg, base_suite(cfg), {task_id});
  if (tasks.empty()) throw ConfigError("no task '" + task_id + "'");
  ControllerConfig cc = cfg.controller;
  cc.freeze_kb = cc.freeze_kb || cfg.strategy == Strategy::cold_start;
  auto r = run_episode(tasks.front(), seed, *ctx.planner, ctx.kb, *ctx.store, cc, episode_id);
  if (!cfg.log_dir.empty()) r.write_event_log(std::filesystem::path(cfg.log_dir) / (episode_id + ".jsonl"));
  if (!cfg.kb_out.empty()) ctx.kb.save(cfg.kb_out);
  return r;
}

json Report::to_json() const {
  json j;
  j["config"] = config;
  j["training"] = summarize(training);
  json cps = json::array();
  for (const auto& c : checkpoints)
    cps.push_back({{"percent", c.percent},
                   {"after_episode", c.after_episode},
                   {"runs", c.runs},
                   {"successes", c.successes},
                   {"sr", c.sr()}});
  j["checkpoints"] = cps;
  json growth = json::array();
  for (std::size_t i = 0; i < training.size(); ++i) growth.push_back(training[i].kb_version);
  j["kb"] = {{"version_start", kb_version_start},
             {"version_end", kb_version_end},
             {"skills", kb_skills},
             {"guardrails", kb_guardrails},
             {"growth", growth}};
  json eps = json::array(), evs = json::array();
  for (const auto& r : training) eps.push_back(row_json(r));
  for (const auto& r : evaluation) evs.push_back(row_json(r));
  j["episodes"] = eps;
  j["evaluation"] = evs;
  return j;
}

std::string Report::to_text() const {
  const json s = summarize(training);
  std::ostringstream o;
  o << "strategy " << config.value("strategy", "?") << "  episodes " << training.size() << "\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %-8s %6s %6s %8s\n", "task", "group", "runs", "sr", "replans");
  o << line;
  for (const auto& t : s.at("per_task")) {
    std::snprintf(line, sizeof line, "%-24s %-8s %6d %6s %8s\n", t.at("task_id").get<std::string>().c_str(),
                  t.at("group").get<std::string>().c_str(),
                  t.at("runs").get<int>(), fmt("%.3f", t.at("sr").get<double>()).c_str(),
                  fmt("%.2f", t.at("replans_mean").get<double>()).c_str());
    o << line;
  }
  o << "\n";
  for (const auto& g : s.at("per_group")) {
    std::snprintf(line, sizeof line, "%-24s %-8s %6d %6s %8s\n", "", g.at("group").get<std::string>().c_str(),
                  g.at("runs").get<int>(), fmt("%.3f", g.at("sr").get<double>()).c_str(),
                  fmt("%.2f", g.at("replans_mean").get<double>()).c_str());
    o << line;
  }
  const auto& all = s.at("overall");
  std::snprintf(line, sizeof line, "%-24s %-8s %6d %6s %8s\n", "", "all", all.at("runs").get<int>(),
                fmt("%.3f", all.at("sr").get<double>()).c_str(), fmt("%.2f", all.at("replans_mean").get<double>()).c_str());
  o << line;
  if (!checkpoints.empty()) {
    o << "\ncheckpoints (held-out seeds)\n";
    for (const auto& c : checkpoints) {
      std::snprintf(line, sizeof line, "  %3d%%  after %5d  sr %s  (%d/%d)\n", c.percent, c.after_episode,
                    fmt("%.3f", c.sr()).c_str(), c.successes, c.runs);
      o << line;
    }
  }
  o << "\nknowledge v" << kb_version_start << " -> v" << kb_version_end << "  skills " << kb_skills << "  guardrails "
    << kb_guardrails << "\n";
  if (!s.at("failures").empty()) {
    o << "failures";
    for (const auto& [k, v] : s.at("failures").items()) o << "  " << k << " " << v.get<int>();
    o << "\n";
  }
  return o.str();
}

void Report::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << to_json().dump(2) << "\n";
  std::ofstream(dir / "report.txt") << to_text();
}

}  // namespace evo
