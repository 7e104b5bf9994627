#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evo/distill/knowledge.hpp"
#include "evo/model/types.hpp"
#include "evo/prompt/prompt.hpp"
#include "evo/recall/recall.hpp"
#include "evo/sim/registry.hpp"

namespace evo {

enum class PlanMode { initial, replan };

struct PlannerRequest {
  std::string goal;
  std::string task_id;
  std::uint64_t seed = 0;
  std::vector<std::string> init_commands;
  PlanMode mode = PlanMode::initial;
  // s_0 in initial mode, s_t when replanning.
  StateSnapshot state;
  // Replan mode only.
  std::string remaining_goal;
  std::vector<SubgoalSpec> completed;
  MemoryCapsule capsule;
  std::vector<Skill> skills;
  std::vector<Guardrail> guardrails;
  // Station blocks already standing within reach of the agent.
  std::set<std::string> placed_stations;

  void check() const;
  const std::string& active_goal() const { return mode == PlanMode::replan ? remaining_goal : goal; }
};

PromptDocument render_planner_prompt(const PlannerRequest& req,
                                     const TemplateSet& templates = TemplateSet::embedded());

// Items the world already provides as placed stations, read from setblock/fill
// init commands.
std::set<std::string> stations_from_commands(const std::vector<std::string>& cmds);

// Deliberate planner defects used to create learnable failures.
struct FaultConfig {
  bool omit_stations = false;
  double rate = 1.0;  // share of (task, seed) pairs the fault applies to

  bool active(const std::string& task_id, std::uint64_t seed) const;
  json to_json() const;
  static FaultConfig from_json(const json& j);
};

// Global constraint strings understood by the executors.
inline constexpr const char* kAvoidHazard = "avoid_hazard";
std::string avoid_cell_constraint(std::uint64_t cell);
std::optional<std::uint64_t> parse_avoid_cell(const std::string& constraint);

// Backward chaining over the recipe graph with knowledge applied. `faulty`
// switches the configured defects on for this call.
PlanSpec scripted_plan(const std::string& goal, const StateSnapshot& state, const std::vector<Guardrail>& guardrails,
                       const std::vector<Skill>& skills, const sim::RecipeGraph& recipes, const FaultConfig& faults,
                       bool faulty, const std::set<std::string>& placed_stations = {});

class Planner {
 public:
  virtual ~Planner() = default;
  virtual PlanSpec plan(const PlannerRequest& req) = 0;
  virtual std::string name() const = 0;
};

class ScriptedPlanner : public Planner {
 public:
  explicit ScriptedPlanner(FaultConfig faults = {}, const sim::RecipeGraph& recipes = sim::RecipeGraph::standard());
  PlanSpec plan(const PlannerRequest& req) override;
  std::string name() const override { return "scripted"; }

 private:
  FaultConfig faults_;
  const sim::RecipeGraph* recipes_;
};

struct EndpointConfig {
  std::string url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "default";
  std::string api_key_env = "EVO_API_KEY";
  double temperature = 0.0;
  int timeout_s = 60;
  int retries = 2;

  json to_json() const;
  static EndpointConfig from_json(const json& j);
};

// First balanced top-level JSON object in `text`, honoring strings.
std::optional<std::string> extract_json_object(const std::string& text);

class ExternalPlanner : public Planner {
 public:
  explicit ExternalPlanner(EndpointConfig cfg, TemplateSet templates = TemplateSet::embedded());
  PlanSpec plan(const PlannerRequest& req) override;
  std::string name() const override { return "external"; }
  // Sends one chat exchange and returns the reply content.
  std::string complete(const json& messages) const;

 private:
  EndpointConfig cfg_;
  TemplateSet templates_;
};

}  // namespace evo
