#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evo/model/json_io.hpp"
#include "evo/model/types.hpp"
#include "evo/sim/registry.hpp"

namespace evo {

struct Skill {
  std::string name;
  std::string goal;
  std::vector<CheckSpec> preconditions;
  std::vector<SubgoalSpec> steps;
  std::vector<CheckSpec> success_checks;
  InvDelta effects;
  std::vector<std::string> effect_predicates;
  std::vector<std::string> provenance;
  int use_count = 0;
  int success_count = 0;
  std::set<std::string> scopes;

  // Dedup key: goal item, step task kinds and normalized conditions.
  std::string signature() const;
  void check() const;
  friend bool operator==(const Skill&, const Skill&) = default;
};

enum class GuardLevel { subgoal, task };
std::string_view to_string(GuardLevel l);

struct GuardTrigger {
  std::optional<TaskKind> task_kind;
  std::optional<FailureReason> reason;
  std::optional<std::uint64_t> cond_sig;
  std::optional<std::uint64_t> spatial_cell;
  std::set<std::string> tags;
  std::optional<std::string> goal_pattern;  // glob over the goal text
  std::set<std::string> lacking;            // items that must be unavailable

  friend bool operator==(const GuardTrigger&, const GuardTrigger&) = default;
};

struct Guardrail {
  std::string guard_id;
  GuardLevel level = GuardLevel::subgoal;
  GuardTrigger trigger;
  std::optional<std::string> forbid;   // subgoal condition to block
  std::vector<SubgoalSpec> require;    // prerequisite subgoals to insert
  std::string consequence;
  std::optional<FailureReason> consequence_reason;
  Indicators indicators{};
  std::vector<std::string> provenance;
  int hit_count = 0;
  std::set<std::string> scopes;

  std::string signature() const;
  void check() const;
  friend bool operator==(const Guardrail&, const Guardrail&) = default;
};

void to_json(json& j, const Skill& s);
void from_json(const json& j, Skill& s);
void to_json(json& j, const GuardTrigger& t);
void from_json(const json& j, GuardTrigger& t);
void to_json(json& j, const Guardrail& g);
void from_json(const json& j, Guardrail& g);

// Planning or execution context guardrail triggers are evaluated against.
// Unset optional fields never veto a match.
struct MatchContext {
  std::string goal;
  std::vector<TaskKind> task_kinds;
  std::vector<std::uint64_t> cond_sigs;
  std::optional<std::uint64_t> spatial_cell;
  std::optional<FailureReason> reason;
  std::set<std::string> tags;
  Inventory available;
};

bool trigger_matches(const GuardTrigger& t, const MatchContext& ctx);
bool glob_match(const std::string& pattern, const std::string& text);

struct LineageRecord {
  std::int64_t version = 0;
  std::string kind;  // "insert" or "merge"
  std::string item_id;
  friend bool operator==(const LineageRecord&, const LineageRecord&) = default;
};

struct CommitResult {
  std::string id;
  bool inserted = false;
  bool changed = false;
};

// Cross-task knowledge: skills and guardrails with dedup-merge on commit and
// scope routing (task group + "global"). Sets only grow.
class KnowledgeBase {
 public:
  CommitResult commit(Skill s, const std::string& group);
  CommitResult commit(Guardrail g, const std::string& group);

  const std::vector<Skill>& skills() const { return skills_; }
  const std::vector<Guardrail>& guardrails() const { return guardrails_; }
  std::int64_t version() const { return version_; }
  const std::vector<LineageRecord>& lineage() const { return lineage_; }

  std::vector<const Skill*> skills_in_scope(const std::string& scope) const;
  std::vector<const Guardrail*> guardrails_in_scope(const std::string& scope) const;
  const Guardrail* find_guard(const std::string& id) const;
  const Skill* find_skill(const std::string& name) const;

  // Statistics updates that do not alter the knowledge items themselves.
  void record_skill_use(const std::string& name, bool success);
  void record_guard_hit(const std::string& id);

  bool empty() const { return skills_.empty() && guardrails_.empty(); }

  json to_json() const;
  static KnowledgeBase from_json(const json& j);
  void save(const std::filesystem::path& dir) const;  // knowledge.json, skills.yaml, failures.yaml
  static KnowledgeBase load(const std::filesystem::path& dir);

  friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;

 private:
  std::vector<Skill> skills_;
  std::vector<Guardrail> guardrails_;
  std::int64_t version_ = 0;
  std::vector<LineageRecord> lineage_;
};

// Guardrails whose trigger holds in `ctx`: task-level first, then
// subgoal-level, then by guard_id.
std::vector<Guardrail> match_guardrails(const KnowledgeBase& kb, const MatchContext& ctx);

// Positive track. Throws ContractViolation if any tuple failed, the list is
// empty or it spans several episodes.
Skill distill_skill(const std::vector<ExperienceTuple>& trajectory, const std::string& goal);

// Subgoal-level guardrail from the trailing failure streak; nullopt below
// k_tol. Throws ContractViolation on mixed condition signatures.
std::optional<Guardrail> distill_subgoal_guardrail(const std::vector<ExperienceTuple>& failures, int k_tol,
                                                   double cell_size = 16.0);

// Task-level guardrail: the first prerequisite of the goal item (backward
// walk over the recipe graph) absent from both the plan and the inventory
// trajectory.
std::optional<Guardrail> distill_task_guardrail(const std::vector<ExperienceTuple>& episode, const std::string& goal,
                                                const PlanSpec& plan,
                                                const sim::RecipeGraph& recipes = sim::RecipeGraph::standard(),
                                                const Inventory& initial_inventory = {});

// YAML interchange in the card field layout plus a structured block.
std::string skills_to_yaml(const std::vector<Skill>& skills);
std::string failures_to_yaml(const std::vector<Guardrail>& guards);
std::vector<Skill> skills_from_yaml(const std::string& text);
std::vector<Guardrail> failures_from_yaml(const std::string& text);

// One-line renderings used by prompts and YAML cards.
std::string render_check(const CheckSpec& c);
std::optional<CheckSpec> parse_check_text(const std::string& text);
std::string render_guardrail(const Guardrail& g);

}  // namespace evo
