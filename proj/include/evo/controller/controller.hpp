#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evo/controller/executor.hpp"
#include "evo/diagnosis/diagnosis.hpp"
#include "evo/distill/knowledge.hpp"
#include "evo/model/json_io.hpp"
#include "evo/planner/planner.hpp"
#include "evo/recall/recall.hpp"
#include "evo/sim/world.hpp"
#include "evo/store/store.hpp"

namespace evo {

struct TaskSpec {
  std::string task_id;
  std::string group;
  std::string goal;
  std::vector<std::string> init_commands;
  std::vector<CheckSpec> success_checks;
  int step_budget = 6000;

  void check() const;
};

void to_json(json& j, const TaskSpec& t);
void from_json(const json& j, TaskSpec& t);

struct Ablations {
  bool no_skill_distill = false;
  bool no_guard_distill = false;
  bool no_knowledge_visibility = false;
  bool planning_only = false;

  std::vector<std::string> names() const;
  static Ablations from_names(const std::vector<std::string>& names);
};

struct ControllerConfig {
  int k_tol = 3;
  int replan_budget = 3;
  int warmup_steps = 5;
  int episode_step_budget = 6000;  // used when the task does not set its own
  double risk_health_drop = 2.0;   // attempt aborts once health fell this much
  int retreat_steps = 40;
  // Consecutive steps the monitor must hold before an attempt succeeds.
  int monitor_hold_steps = 1;
  double cell_size = 16.0;
  StagnationConfig stagnation;
  RecallConfig recall;
  Ablations ablations;
  // Read-only knowledge: nothing is committed (cold start, frozen phases).
  bool freeze_kb = false;

  void check() const;
  json to_json() const;
  static ControllerConfig from_json(const json& j);
};

struct AttemptRecord {
  SubgoalSpec subgoal;
  ExperienceTuple tuple;
  int steps_used = 1;
  int wall_ticks = 1;
  bool risk_abort = false;

  bool ok() const { return tuple.diagnosis.outcome; }
};

// Runs one attempt until the subgoal monitor holds, the step budget
// (timeout_s x ticks per second, capped by `step_cap` when positive) runs out,
// the executor finishes or reports a missing requirement, or the environment
// ends. The tuple is appended to `store`. Never throws for environment faults.
AttemptRecord execute_subgoal(const SubgoalSpec& sg, sim::World& env, ExperienceStore& store,
                              const ControllerConfig& cfg, const ExecConstraints& constraints,
                              const std::string& episode_id, std::int64_t attempt_index, int step_cap = 0,
                              Executor* executor = nullptr);

// True when the trailing run of failures is at least k_tol long.
bool should_replan(const std::vector<AttemptRecord>& recent, int k_tol);
bool should_replan(const std::vector<bool>& outcomes, int k_tol);

// Keeps subgoals before `failed_index`, appends `tail` renumbered after them
// and merges the global constraints.
PlanSpec splice_plan(const PlanSpec& plan, std::size_t failed_index, const PlanSpec& tail);

// Guardrails shown to the planner for `goal`: scope-filtered kb matches over
// the goal's prerequisite templates plus the episode-local ones.
std::vector<Guardrail> planning_guardrails(const KnowledgeBase& kb, const std::string& goal, const std::string& scope,
                                           const Inventory& available, const std::vector<Guardrail>& local = {});

RecallContext recall_context(const std::string& goal, const sim::World& env, const std::vector<SubgoalSpec>& pending,
                             const std::string& scope, double cell_size = 16.0);

struct ReplanResult {
  PlanSpec plan;
  std::optional<std::string> committed_guard;
};

// Commits (or keeps episode-local, when `commit` is false) the new guard,
// recalls a fresh capsule and asks the planner for the rest of the goal.
// The completed prefix is kept as is. Throws PlannerError/TransportError.
ReplanResult local_replan(const PlanSpec& plan, std::size_t failed_index, const std::optional<Guardrail>& new_guard,
                          bool commit, PlannerRequest base, const RecallContext& ctx, Planner& planner,
                          KnowledgeBase& kb, const ExperienceStore& store, const ControllerConfig& cfg,
                          const std::string& scope, std::vector<Guardrail>& local_guards);

enum class EpisodeFailure { task_timeout, deadlock, env_terminated };
std::string_view to_string(EpisodeFailure f);

struct EpisodeResult {
  std::string episode_id;
  std::string task_id;
  std::uint64_t seed = 0;
  bool success = false;
  std::vector<bool> subgoal_outcomes;
  int replans = 0;
  std::optional<EpisodeFailure> failure_kind;
  std::vector<std::string> distilled;
  int attempts = 0;
  int steps = 0;
  std::vector<json> events;

  json to_json() const;
  void write_event_log(const std::filesystem::path& path) const;
};

struct EpisodeHooks {
  // Replaces the default executor routing.
  std::function<std::unique_ptr<Executor>(const SubgoalSpec&, const ExecConstraints&)> executor;
  // Runs right after reset and warm-up, before planning.
  std::function<void(sim::World&)> after_reset;
};

// Plan, execute, store, diagnose and replan until the task checks hold or the
// step budget runs out; distills and commits knowledge at the end. All
// environment and planner failures end up in failure_kind.
EpisodeResult run_episode(const TaskSpec& task, std::uint64_t seed, Planner& planner, KnowledgeBase& kb,
                          ExperienceStore& store, const ControllerConfig& cfg, const std::string& episode_id,
                          const EpisodeHooks& hooks = {}, sim::World* world = nullptr);

struct ReplayResult {
  bool preconditions_met = false;
  bool success = false;
  std::vector<AttemptRecord> attempts;
  int steps = 0;
};

// Runs a skill's steps in order on the current world, retrying each step up
// to k_tol times (after a risk abort: retreat, then avoid hazards), then
// evaluates its success checks. Nothing runs when the preconditions fail.
ReplayResult replay_skill(const Skill& skill, sim::World& env, ExperienceStore& store, const ControllerConfig& cfg,
                          const std::string& episode_id = "replay");

}  // namespace evo
