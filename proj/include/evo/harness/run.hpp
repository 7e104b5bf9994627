#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evo/controller/controller.hpp"
#include "evo/planner/planner.hpp"
#include "evo/store/store.hpp"

namespace evo {

enum class Strategy { cold_start, self_learning, pretrain_freeze, mixed_sampling };
std::string_view to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

struct PlannerSettings {
  std::string backend = "scripted";  // scripted | external
  EndpointConfig endpoint;
  FaultConfig faults;
  std::string templates_dir;  // card overrides, empty for the compiled-in set
};

struct RunConfig {
  std::vector<std::uint64_t> seeds;       // training seeds
  std::vector<std::uint64_t> eval_seeds;  // held out, for checkpoints
  Strategy strategy = Strategy::self_learning;
  // Task ids or group names; empty means the whole suite.
  std::vector<std::string> tasks;
  std::vector<std::string> easy_pool;
  std::vector<std::string> hard_pool;
  std::string suite_path;  // YAML/JSON suite instead of the shipped one
  bool hazard = false;
  // Training episodes; 0 runs every task x seed once (both pools for curricula).
  int episodes = 0;
  bool checkpoints = true;
  PlannerSettings planner;
  ControllerConfig controller;
  StoreConfig store;
  std::string store_dir;  // empty keeps the store in memory
  std::string kb_in;      // initial knowledge directory
  std::string kb_out;     // where the final knowledge is saved
  std::string log_dir;    // per-episode JSONL event logs

  RunConfig();
  void check() const;
  json to_json() const;
  static RunConfig from_json(const json& j);
  // Reads a YAML or JSON document.
  static RunConfig load(const std::filesystem::path& path);
};

// Sets `key` (dotted path, or a bare threshold name such as k_tol, alpha, K,
// w, window_k) to `value`, parsed as JSON when possible. Throws ConfigError
// for an unknown key.
void apply_override(json& config, const std::string& key, const std::string& value);

// Throws ConfigError for an external backend without its token variable set.
std::unique_ptr<Planner> make_planner(const PlannerSettings& s);

// Tasks named by ids or group names, in suite order, without duplicates.
std::vector<TaskSpec> resolve_tasks(const std::vector<TaskSpec>& suite, const std::vector<std::string>& names);

struct EpisodeRow {
  std::string episode_id;
  std::string task_id;
  std::string group;
  std::string phase;  // train, pretrain, target, or eval@<percent>
  std::uint64_t seed = 0;
  bool success = false;
  int replans = 0;
  int attempts = 0;
  int steps = 0;
  std::string failure;
  std::int64_t kb_version = 0;  // after the episode
};

struct Checkpoint {
  int percent = 0;
  int after_episode = 0;
  int runs = 0;
  int successes = 0;
  double sr() const { return runs ? double(successes) / runs : 0.0; }
};

struct Report {
  json config;
  std::vector<EpisodeRow> training;
  std::vector<EpisodeRow> evaluation;
  std::vector<Checkpoint> checkpoints;
  std::int64_t kb_version_start = 0;
  std::int64_t kb_version_end = 0;
  std::size_t kb_skills = 0;
  std::size_t kb_guardrails = 0;

  json to_json() const;
  std::string to_text() const;
  // report.json and report.txt.
  void write(const std::filesystem::path& dir) const;
};

// Everything one run shares: planner, knowledge and store.
struct RunContext {
  std::unique_ptr<Planner> planner;
  KnowledgeBase kb;
  std::unique_ptr<ExperienceStore> store;

  static RunContext from_config(const RunConfig& cfg);
};

// Sweeps every task x seed under cold_start or self_learning; curriculum
// strategies are delegated to curriculum_run. Episode crashes count as failures.
Report run_eval(const RunConfig& cfg);
Report run_eval(const RunConfig& cfg, RunContext& ctx);

// pretrain_freeze or mixed_sampling over the easy and hard pools.
Report curriculum_run(const RunConfig& cfg);
Report curriculum_run(const RunConfig& cfg, RunContext& ctx);

// One episode with the run's planner, knowledge and store.
EpisodeResult run_single(const RunConfig& cfg, RunContext& ctx, const std::string& task_id, std::uint64_t seed,
                         const std::string& episode_id = "ep_0001");

}  // namespace evo
