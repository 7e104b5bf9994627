#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>

#include "evo/diagnosis/diagnosis.hpp"
#include "evo/distill/templates.hpp"
#include "evo/error.hpp"
#include "evo/model/plan.hpp"
#include "evo/planner/planner.hpp"
#include "evo/recall/encoder.hpp"

namespace evo {

bool FaultConfig::active(const std::string& task_id, std::uint64_t seed) const {
  if (!omit_stations || rate <= 0.0) return false;
  if (rate >= 1.0) return true;
  const auto h = fnv1a64(task_id + "#" + std::to_string(seed));
  return static_cast<double>(h % 1000000) / 1000000.0 < rate;
}

json FaultConfig::to_json() const { return {{"omit_stations", omit_stations}, {"rate", rate}}; }

FaultConfig FaultConfig::from_json(const json& j) {
  FaultConfig f;
  f.omit_stations = j.value("omit_stations", f.omit_stations);
  f.rate = j.value("rate", f.rate);
  if (!(f.rate >= 0.0 && f.rate <= 1.0)) throw ConfigError("fault rate must lie in [0, 1]");
  return f;
}

std::string avoid_cell_constraint(std::uint64_t cell) { return "avoid_cell:" + hex64(cell); }

std::optional<std::uint64_t> parse_avoid_cell(const std::string& c) {
  if (c.rfind("avoid_cell:", 0) != 0 || c.size() != 11 + 16) return std::nullopt;
  try {
    return std::stoull(c.substr(11), nullptr, 16);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::set<std::string> stations_from_commands(const std::vector<std::string>& cmds) {
  std::set<std::string> out;
  for (const auto& cmd : cmds) {
    std::string c = cmd;
    if (!c.empty() && c[0] == '/') c = c.substr(1);
    if (c.rfind("setblock", 0) != 0 && c.rfind("fill", 0) != 0) continue;
    const auto last = c.find_last_of(' ');
    if (last == std::string::npos) continue;
    std::string block = c.substr(last + 1);
    if (block.rfind("minecraft:", 0) == 0) block = block.substr(10);
    if (sim::is_station_item(block)) out.insert(block);
  }
  return out;
}

namespace {

using Inv = std::map<std::string, int>;

bool has_tier(const Inv& inv, sim::Tier t) {
  for (const auto& [item, n] : inv)
    if (n > 0 && sim::tool_tier(item) >= t) return true;
  return false;
}

int held(const Inv& inv, const std::string& item) {
  auto it = inv.find(item);
  return it == inv.end() ? 0 : it->second;
}

struct Chain {
  const sim::RecipeGraph& g;
  const Inv& inv;
  bool omit_stations;
  const std::set<std::string>& forced;  // survive the fault
  const std::set<std::string>& placed;
  const std::map<std::string, std::set<std::string>>& extra;

  bool keep_station(const std::string& s) const {
    if (placed.contains(s)) return false;
    return !omit_stations || forced.contains(s);
  }

  // Consumed inputs (with per-batch counts) and one-off needs of producing `item`.
  void deps(const std::string& item, std::vector<std::pair<std::string, int>>& consumed,
            std::vector<std::string>& once) const {
    if (const auto* r = g.producer(item)) {
      for (const auto& [in, n] : r->inputs) consumed.emplace_back(in, n);
      if (r->fuel) consumed.emplace_back(*r->fuel, 1);
      const std::string st = sim::station_item(r->station);
      if (!st.empty() && keep_station(st)) once.push_back(st);
    } else if (auto src = g.source_block(item)) {
      const auto rule = g.mining_rule(*src);
      if (rule.min_tier > sim::Tier::hand && !has_tier(inv, rule.min_tier)) once.push_back(sim::pickaxe_for(rule.min_tier));
    } else {
      throw PlannerError("no way to obtain '" + item + "'");
    }
    if (auto it = extra.find(item); it != extra.end())
      for (const auto& e : it->second)
        if (!sim::is_station_item(e) || keep_station(e)) once.push_back(e);
  }

  int batch_size(const std::string& item) const {
    if (const auto* r = g.producer(item)) return r->outputs.at(item);
    return 1;
  }

  // Items with their absolute target counts, producers before consumers.
  std::vector<std::pair<std::string, int>> run(const std::vector<std::pair<std::string, int>>& roots) const {
    std::vector<std::string> order;
    std::set<std::string> seen, active;
    std::function<void(const std::string&)> visit = [&](const std::string& item) {
      if (seen.contains(item)) return;
      if (active.contains(item)) throw PlannerError("recipe cycle at '" + item + "'");
      active.insert(item);
      std::vector<std::pair<std::string, int>> consumed;
      std::vector<std::string> once;
      deps(item, consumed, once);
      for (const auto& [in, n] : consumed) visit(in);
      for (const auto& o : once) visit(o);
      active.erase(item);
      seen.insert(item);
      order.push_back(item);
    };
    for (const auto& [r, n] : roots) visit(r);

    std::map<std::string, int> consumption, once_need, target;
    for (const auto& [r, n] : roots) once_need[r] = std::max(once_need[r], n);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::string& item = *it;
      const int need = consumption[item] + once_need[item];
      const int deficit = need - held(inv, item);
      if (deficit <= 0) continue;
      target[item] = need;
      std::vector<std::pair<std::string, int>> consumed;
      std::vector<std::string> once;
      deps(item, consumed, once);
      const int per = batch_size(item);
      const int batches = (deficit + per - 1) / per;
      for (const auto& [in, n] : consumed) consumption[in] += batches * n;
      for (const auto& o : once) once_need[o] = std::max(once_need[o], 1);
    }
    std::vector<std::pair<std::string, int>> out;
    for (const auto& item : order)
      if (target.contains(item)) out.emplace_back(item, target[item]);
    return out;
  }
};

bool checks_hold(const std::vector<CheckSpec>& checks, const StateSnapshot& s) {
  return std::all_of(checks.begin(), checks.end(), [&](const CheckSpec& c) { return evaluate_check(c, s); });
}

MatchContext subgoal_context(const std::string& goal, const SubgoalSpec& sg, const Inv& inv) {
  MatchContext m;
  m.goal = goal;
  m.task_kinds = {sg.task_kind};
  m.cond_sigs = {condition_hash(sg)};
  m.available = inv;
  return m;
}

std::vector<const Guardrail*> subgoal_guards(const std::vector<Guardrail>& guards, const std::string& goal,
                                             const SubgoalSpec& sg, const Inv& inv) {
  std::vector<const Guardrail*> out;
  const auto ctx = subgoal_context(goal, sg, inv);
  for (const auto& g : guards)
    if (g.level == GuardLevel::subgoal && trigger_matches(g.trigger, ctx)) out.push_back(&g);
  return out;
}

int scaled_timeout(const SubgoalSpec& sg, int n) { return std::min(3600, sg.timeout_s + 10 * std::max(0, n - 1)); }

bool is_spatial(FailureReason r) {
  return r == FailureReason::nav_stuck || r == FailureReason::nav_oscillate || r == FailureReason::path_unreachable;
}

}  // namespace

PlanSpec scripted_plan(const std::string& goal_text_in, const StateSnapshot& state, const std::vector<Guardrail>& guardrails,
                       const std::vector<Skill>& skills, const sim::RecipeGraph& recipes, const FaultConfig& faults,
                       bool faulty, const std::set<std::string>& placed_stations) {
  const auto goal = parse_goal(goal_text_in);
  if (!goal || !sim::is_item(goal->item)) throw PlannerError("goal does not name a known item: '" + goal_text_in + "'");
  const Inv& inv = state.inventory;

  // Task-level guardrails contribute mandatory prerequisite subgoals.
  MatchContext task_ctx;
  task_ctx.goal = goal_text_in;
  task_ctx.available = inv;
  std::set<std::string> forced;
  std::vector<std::pair<std::string, int>> roots;
  for (const auto& g : guardrails) {
    if (g.level != GuardLevel::task || !trigger_matches(g.trigger, task_ctx)) continue;
    for (const auto& r : g.require)
      if (auto item = produced_item(r)) {
        forced.insert(*item);
        roots.emplace_back(*item, 1);
      }
  }
  roots.emplace_back(goal->item, goal->count);

  PlanSpec plan;
  std::set<std::string> constraints;
  auto apply_guards = [&](SubgoalSpec& sg, std::map<std::string, std::set<std::string>>* extra) -> bool {
    for (const Guardrail* g : subgoal_guards(guardrails, goal_text_in, sg, inv)) {
      const FailureReason r = g->consequence_reason.value_or(FailureReason::unknown);
      if (is_spatial(r)) {
        if (g->trigger.spatial_cell) constraints.insert(avoid_cell_constraint(*g->trigger.spatial_cell));
        else sg.timeout_s = std::min(3600, sg.timeout_s * 2);
      } else if (r == FailureReason::risk_abort || r == FailureReason::env_terminated) {
        constraints.insert(kAvoidHazard);
      } else if (r == FailureReason::tool_missing) {
        if (extra && !g->trigger.lacking.empty()) {
          auto item = produced_item(sg);
          if (item) (*extra)[*item].insert(g->trigger.lacking.begin(), g->trigger.lacking.end());
        } else {
          sg.timeout_s = std::min(3600, sg.timeout_s * 2);
        }
      } else if (r == FailureReason::timeout || r == FailureReason::monitor_never_true ||
                 r == FailureReason::gui_blocked) {
        sg.timeout_s = std::min(3600, sg.timeout_s * 2);
      } else {
        return false;  // drop
      }
    }
    return true;
  };

  // Skill reuse: same goal, preconditions met, nothing it does is forbidden.
  const Skill* chosen = nullptr;
  for (const auto& s : skills) {
    auto sg = parse_goal(s.goal);
    if (!sg || sg->item != goal->item || sg->count != goal->count || s.steps.empty()) continue;
    if (!checks_hold(s.preconditions, state)) continue;
    bool covers = true;
    for (const auto& f : forced)
      covers = covers && std::any_of(s.steps.begin(), s.steps.end(),
                                     [&](const SubgoalSpec& st) { return produced_item(st) == f; });
    if (!covers) continue;
    if (chosen) {
      const double a = double(s.success_count) / std::max(1, s.use_count);
      const double b = double(chosen->success_count) / std::max(1, chosen->use_count);
      if (a < b || (a == b && s.name >= chosen->name)) continue;
    }
    chosen = &s;
  }

  std::vector<SubgoalSpec> subgoals;
  bool from_skill = false;
  if (chosen) {
    subgoals = chosen->steps;
    bool ok = true;
    for (auto& sg : subgoals) ok = ok && apply_guards(sg, nullptr);
    from_skill = ok;
    if (ok && faulty && faults.omit_stations)
      std::erase_if(subgoals, [&](const SubgoalSpec& sg) {
        auto item = produced_item(sg);
        return item && sim::is_station_item(*item) && *item != goal->item && !forced.contains(*item);
      });
    if (!ok) {
      subgoals.clear();
      constraints.clear();
    }
  }

  if (!from_skill) {
    std::map<std::string, std::set<std::string>> extra;
    for (int pass = 0; pass < 4; ++pass) {
      Chain chain{recipes, inv, faulty && faults.omit_stations, forced, placed_stations, extra};
      auto extra_before = extra;
      subgoals.clear();
      constraints.clear();
      for (const auto& [item, n] : chain.run(roots)) {
        SubgoalSpec sg = subgoal_for(item, n, recipes);
        sg.timeout_s = scaled_timeout(sg, n);
        if (!apply_guards(sg, &extra)) {
          if (item == goal->item) throw PlannerError("a guardrail forbids the only route to '" + goal->item + "'");
          continue;
        }
        subgoals.push_back(std::move(sg));
      }
      if (extra == extra_before) break;
    }
  }

  // The goal subgoal always closes the plan, even if already satisfied.
  if (subgoals.empty() || produced_item(subgoals.back()) != goal->item) {
    SubgoalSpec sg = subgoal_for(goal->item, goal->count, recipes);
    subgoals.push_back(std::move(sg));
  }
  for (std::size_t i = 0; i < subgoals.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "sg_%03zu", i + 1);
    subgoals[i].subgoal_id = id;
  }
  plan.subgoals = std::move(subgoals);
  plan.global_constraints.assign(constraints.begin(), constraints.end());
  std::string key = goal_text_in + "|" + json(inv).dump();
  for (const auto& g : guardrails) key += "|" + g.guard_id;
  if (from_skill) key += "|" + chosen->name;
  plan.plan_id = "p_" + hex64(fnv1a64(key)).substr(0, 8);
  return validate_plan(serialize_plan(plan));
}

ScriptedPlanner::ScriptedPlanner(FaultConfig faults, const sim::RecipeGraph& recipes)
    : faults_(faults), recipes_(&recipes) {}

PlanSpec ScriptedPlanner::plan(const PlannerRequest& req) {
  req.check();
  auto placed = stations_from_commands(req.init_commands);
  placed.insert(req.placed_stations.begin(), req.placed_stations.end());
  return scripted_plan(req.active_goal(), req.state, req.guardrails, req.skills, *recipes_, faults_,
                       faults_.active(req.task_id, req.seed), placed);
}

}  // namespace evo
