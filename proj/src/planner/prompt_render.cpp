#include <cstdio>

#include "evo/error.hpp"
#include "evo/planner/planner.hpp"

namespace evo {

void PlannerRequest::check() const {
  if (goal.empty()) throw ContractViolation("planner request needs a goal");
  if (mode == PlanMode::initial && (!remaining_goal.empty() || !completed.empty()))
    throw ContractViolation("initial planner request carries replan fields");
  if (mode == PlanMode::replan && remaining_goal.empty())
    throw ContractViolation("replan request needs a remaining goal");
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string coords(const Vec3& v) { return "[" + num(v.x) + "," + num(v.y) + "," + num(v.z) + "]"; }

std::string quoted_list(const std::vector<std::string>& items) {
  return json(items).dump();
}

std::string bullet_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += (out.empty() ? "- " : "\n- ") + l;
  return out;
}

std::string render_capsule(const MemoryCapsule& c) {
  std::vector<std::string> lines;
  for (const auto& f : c.facts) lines.push_back("fact: " + f.key + " = " + f.value + " [" + f.source + "]");
  for (const auto& f : c.constraints) lines.push_back("constraint: " + f.key + " = " + f.value + " [" + f.source + "]");
  if (!c.next_actions.empty()) lines.push_back("next_actions: " + quoted_list(c.next_actions));
  return bullet_lines(lines);
}

std::string render_skill(const Skill& s) {
  std::vector<std::string> pre, steps;
  for (const auto& c : s.preconditions) pre.push_back(render_check(c));
  for (const auto& st : s.steps) steps.push_back(st.condition);
  return "- name: " + s.name + "\n  goal: " + s.goal + "\n  preconditions: " + quoted_list(pre) +
         "\n  steps: " + quoted_list(steps);
}

std::string render_failure(const Guardrail& g) {
  std::vector<std::string> recovery;
  for (const auto& r : g.require) recovery.push_back(std::string(to_string(r.task_kind)) + " " + r.condition);
  std::string trigger;
  if (g.trigger.task_kind) trigger += " kind=" + std::string(to_string(*g.trigger.task_kind));
  if (g.trigger.reason) trigger += " reason=" + std::string(to_string(*g.trigger.reason));
  if (g.trigger.goal_pattern) trigger += " goal=" + *g.trigger.goal_pattern;
  for (const auto& l : g.trigger.lacking) trigger += " lacking=" + l;
  return "- id: " + g.guard_id + "\n  symptom: " + g.consequence + "\n  trigger:" + (trigger.empty() ? " any" : trigger) +
         "\n  guardrail: " + quoted_list({render_guardrail(g)}) + "\n  recovery: " + quoted_list(recovery);
}

}  // namespace

PromptDocument render_planner_prompt(const PlannerRequest& req, const TemplateSet& templates) {
  req.check();
  const Card& card = templates.card("planner");
  std::vector<std::string> parts;
  auto add = [&](const char* block, std::map<std::string, std::string> values) {
    parts.push_back(fill(card.block(block), values));
  };

  add("task", {{"goal", req.goal}});
  if (req.mode == PlanMode::replan) {
    std::vector<std::string> done;
    for (const auto& sg : req.completed) done.push_back(sg.condition);
    add("replan", {{"remaining", req.remaining_goal}, {"completed", done.empty() ? "(none)" : quoted_list(done)}});
  }
  add("init_commands", {{"commands", req.init_commands.empty() ? "- (none)" : bullet_lines(req.init_commands)}});
  add(req.mode == PlanMode::replan ? "current_state" : "init_state",
      {{"inventory", json(req.state.inventory).dump()},
       {"coords", coords(req.state.coords)},
       {"health", num(req.state.health)},
       {"hunger", num(req.state.hunger)}});
  if (!req.capsule.empty()) add("memory", {{"capsule", render_capsule(req.capsule)}});
  if (!req.skills.empty()) {
    std::string s;
    for (const auto& sk : req.skills) s += (s.empty() ? "" : "\n\n") + render_skill(sk);
    add("skills", {{"skills", s}});
  }
  if (!req.guardrails.empty()) {
    std::string s;
    for (const auto& g : req.guardrails) s += (s.empty() ? "" : "\n\n") + render_failure(g);
    add("failures", {{"failures", s}});
  }
  add("closing", {});

  PromptDocument doc;
  doc.system = card.block("system");
  for (const auto& p : parts) doc.user += (doc.user.empty() ? "" : "\n\n") + p;
  return doc;
}

}  // namespace evo
