#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "evo/distill/knowledge.hpp"
#include "evo/distill/templates.hpp"
#include "evo/error.hpp"
#include "evo/recall/encoder.hpp"

namespace evo {

namespace {

bool spatial_reason(FailureReason r) {
  switch (r) {
    case FailureReason::nav_stuck:
    case FailureReason::nav_oscillate:
    case FailureReason::path_unreachable:
    case FailureReason::risk_abort:
    case FailureReason::env_terminated: return true;
    default: return false;
  }
}

std::vector<CheckSpec> without_coordinates(const std::vector<CheckSpec>& checks) {
  std::vector<CheckSpec> out;
  for (const auto& c : checks)
    if (c.kind != CheckKind::coord_near && c.kind != CheckKind::coord_moved_ge) out.push_back(c);
  return out;
}

std::string step_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "sg_%03zu", i + 1);
  return buf;
}

}  // namespace

Skill distill_skill(const std::vector<ExperienceTuple>& trajectory, const std::string& goal) {
  if (trajectory.empty()) throw ContractViolation("distill_skill: empty trajectory");
  for (const auto& e : trajectory) {
    if (!e.diagnosis.outcome) throw ContractViolation("distill_skill: trajectory contains a failed attempt " + e.doc_id);
    if (e.episode_id != trajectory.front().episode_id)
      throw ContractViolation("distill_skill: trajectory spans several episodes");
  }

  Skill s;
  s.goal = goal;
  s.name = goal;
  std::replace(s.name.begin(), s.name.end(), ' ', '_');
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    SubgoalSpec step = trajectory[i].action;
    step.subgoal_id = step_id(i);
    step.checks = without_coordinates(step.checks);
    s.steps.push_back(std::move(step));
    for (const auto& [item, n] : trajectory[i].diagnosis.state_diff.inventory) s.effects[item] += n;
    s.provenance.push_back(trajectory[i].doc_id);
  }
  std::erase_if(s.effects, [](const auto& kv) { return kv.second == 0; });
  for (const auto& [item, n] : s.effects) {
    if (n >= 0) continue;
    CheckSpec c;
    c.kind = CheckKind::inv_ge;
    c.item = item;
    c.n = -n;
    s.preconditions.push_back(c);
  }
  s.success_checks = without_coordinates(trajectory.back().action.checks);
  s.use_count = 1;
  s.success_count = 1;
  return s;
}

std::optional<Guardrail> distill_subgoal_guardrail(const std::vector<ExperienceTuple>& failures, int k_tol,
                                                   double cell_size) {
  if (k_tol < 1) throw ConfigError("k_tol must be >= 1");
  if (failures.empty()) return std::nullopt;
  const std::uint64_t sig = condition_hash(failures.front().action);
  for (const auto& e : failures)
    if (condition_hash(e.action) != sig) throw ContractViolation("distill_subgoal_guardrail: mixed condition signatures");

  std::size_t start = failures.size();
  while (start > 0 && !failures[start - 1].diagnosis.outcome) --start;
  const std::vector<ExperienceTuple> streak(failures.begin() + static_cast<std::ptrdiff_t>(start), failures.end());
  if (static_cast<int>(streak.size()) < k_tol) return std::nullopt;

  std::map<FailureReason, int> reasons;
  std::map<std::uint64_t, int> cells;
  for (const auto& e : streak) {
    ++reasons[*e.diagnosis.failure_reason];
    ++cells[spatial_hash(e.s_pre.coords, cell_size)];
  }
  FailureReason dominant = reasons.begin()->first;
  for (const auto& [r, n] : reasons)
    if (n > reasons[dominant] || (n == reasons[dominant] && priority(r) < priority(dominant))) dominant = r;
  // Majority cell; ties go to the most recent attempt's cell.
  std::uint64_t cell = spatial_hash(streak.back().s_pre.coords, cell_size);
  for (const auto& [c, n] : cells)
    if (n > cells[cell]) cell = c;

  const auto& last = streak.back();
  Guardrail g;
  g.level = GuardLevel::subgoal;
  g.trigger.task_kind = last.action.task_kind;
  g.trigger.reason = dominant;
  g.trigger.cond_sig = sig;
  if (spatial_reason(dominant)) g.trigger.spatial_cell = cell;
  if (dominant == FailureReason::tool_missing)
    for (const auto& e : streak)
      for (const auto& m : e.diagnosis.missing) g.trigger.lacking.insert(m);
  g.forbid = last.action.condition;

  double progress = 0;
  for (const auto& e : streak) {
    for (std::size_t i = 0; i < kIndicatorDim; ++i) g.indicators[i] += e.diagnosis.indicators[i] / streak.size();
    progress += e.diagnosis.indicators[kInvChangeL1];
  }
  g.consequence_reason = dominant;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s x%zu on '%s', inventory progress %g, mean coord variance %.3g",
                std::string(to_string(dominant)).c_str(), streak.size(), last.action.condition.c_str(), progress,
                g.indicators[kCoordVariance]);
  g.consequence = buf;
  if (g.trigger.spatial_cell) {
    auto c = cell_of(last.s_pre.coords, cell_size);
    std::snprintf(buf, sizeof buf, " near cell (%lld,%lld,%lld)", static_cast<long long>(c[0]),
                  static_cast<long long>(c[1]), static_cast<long long>(c[2]));
    g.consequence += buf;
  }
  if (!g.trigger.lacking.empty()) {
    g.consequence += "; lacking";
    for (const auto& m : g.trigger.lacking) g.consequence += " " + m;
  }
  for (const auto& e : streak) g.provenance.push_back(e.doc_id);
  return g;
}

std::optional<Guardrail> distill_task_guardrail(const std::vector<ExperienceTuple>& episode, const std::string& goal,
                                                const PlanSpec& plan, const sim::RecipeGraph& recipes,
                                                const Inventory& initial_inventory) {
  auto parsed = parse_goal(goal);
  if (!parsed) return std::nullopt;

  std::set<std::string> covered;
  for (const auto& sg : plan.subgoals)
    for (const auto& c : sg.checks)
      if (c.item) covered.insert(*c.item);
  auto add_inv = [&](const Inventory& inv) {
    for (const auto& [item, n] : inv)
      if (n > 0) covered.insert(item);
  };
  add_inv(initial_inventory);
  for (const auto& e : episode) {
    add_inv(e.s_pre.inventory);
    add_inv(e.s_post.inventory);
  }

  std::optional<std::string> missing;
  std::set<std::string> seen{parsed->item};
  std::vector<std::string> queue{parsed->item};
  for (std::size_t i = 0; i < queue.size() && !missing; ++i) {
    for (const auto& p : direct_prerequisites(queue[i], recipes)) {
      if (!covered.contains(p)) {
        missing = p;
        break;
      }
      if (seen.insert(p).second) queue.push_back(p);
    }
  }
  if (!missing) return std::nullopt;

  // Generalize to sibling goals (e.g. every *_pickaxe) when each of them
  // also depends on the missing prerequisite.
  std::string pattern = parsed->verb + " " + parsed->item;
  if (auto us = parsed->item.rfind('_'); us != std::string::npos) {
    const std::string suffix = parsed->item.substr(us);
    bool all = true;
    int siblings = 0;
    for (const auto& item : sim::item_names()) {
      if (item.size() <= suffix.size() || item.compare(item.size() - suffix.size(), suffix.size(), suffix) != 0)
        continue;
      ++siblings;
      auto pre = all_prerequisites(item, recipes);
      if (std::find(pre.begin(), pre.end(), *missing) == pre.end()) all = false;
    }
    if (all && siblings > 1) pattern = parsed->verb + " *" + suffix;
  }

  Guardrail g;
  g.level = GuardLevel::task;
  g.trigger.goal_pattern = pattern;
  g.trigger.lacking = {*missing};
  SubgoalSpec req = subgoal_for(*missing, 1, recipes);
  req.subgoal_id = "sg_req";
  g.require = {req};
  for (auto it = episode.rbegin(); it != episode.rend(); ++it)
    if (it->diagnosis.failure_reason) {
      g.consequence_reason = *it->diagnosis.failure_reason;
      break;
    }
  g.consequence = "deadlock: '" + goal + "' stalled; '" + *missing + "' was never planned or held";
  const std::size_t from = episode.size() > 8 ? episode.size() - 8 : 0;
  for (std::size_t i = from; i < episode.size(); ++i) g.provenance.push_back(episode[i].doc_id);
  return g;
}

}  // namespace evo
