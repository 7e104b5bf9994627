#include "evo/distill/knowledge.hpp"

#include <fnmatch.h>

#include <algorithm>

#include "evo/distill/templates.hpp"
#include "evo/error.hpp"
#include "evo/model/plan.hpp"
#include "evo/recall/encoder.hpp"

namespace evo {

std::string_view to_string(GuardLevel l) { return l == GuardLevel::task ? "task" : "subgoal"; }

namespace {

std::optional<GuardLevel> parse_level(std::string_view s) {
  if (s == "task") return GuardLevel::task;
  if (s == "subgoal") return GuardLevel::subgoal;
  return std::nullopt;
}

std::string normalized_condition(const SubgoalSpec& sg) {
  std::string out;
  for (const auto& t : content_tokens(sg.condition)) out += (out.empty() ? "" : " ") + t;
  return out;
}

std::vector<CheckSpec> checks_from(const json& j, const std::string& path) {
  std::vector<CheckSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(validate_check(j[i], path + "[" + std::to_string(i) + "]", false));
  return out;
}

std::vector<SubgoalSpec> subgoals_from(const json& j, const std::string& path) {
  std::vector<SubgoalSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(validate_subgoal(j[i], path + "[" + std::to_string(i) + "]", false));
  return out;
}

template <class T>
void merge_sorted(std::vector<T>& into, const std::vector<T>& from) {
  into.insert(into.end(), from.begin(), from.end());
  std::sort(into.begin(), into.end());
  into.erase(std::unique(into.begin(), into.end()), into.end());
}

}  // namespace

std::string Skill::signature() const {
  auto g = parse_goal(goal);
  std::string sig = "skill|" + (g ? g->item : goal);
  for (const auto& s : steps) sig += "|" + std::string(to_string(s.task_kind)) + ":" + normalized_condition(s);
  return sig;
}

void Skill::check() const {
  if (name.empty()) throw ContractViolation("skill name is empty");
  if (steps.empty()) throw ContractViolation("skill '" + name + "' has no steps");
  if (success_count > use_count) throw ContractViolation("skill '" + name + "' success_count > use_count");
}

std::string Guardrail::signature() const {
  json t = trigger;
  return "guard|" + std::string(to_string(level)) + "|" + canonical(t);
}

void Guardrail::check() const {
  if (level == GuardLevel::subgoal && (!forbid || !require.empty()))
    throw ContractViolation("subgoal guardrail must set forbid only");
  if (level == GuardLevel::task && (forbid || require.empty()))
    throw ContractViolation("task guardrail must set require only");
}

void to_json(json& j, const Skill& s) {
  json pre = json::array(), steps = json::array(), succ = json::array();
  for (const auto& c : s.preconditions) pre.push_back(c);
  for (const auto& st : s.steps) steps.push_back(st);
  for (const auto& c : s.success_checks) succ.push_back(c);
  j = json{{"name", s.name},
           {"goal", s.goal},
           {"preconditions", pre},
           {"steps", steps},
           {"success_checks", succ},
           {"effects", s.effects},
           {"effect_predicates", s.effect_predicates},
           {"provenance", s.provenance},
           {"use_count", s.use_count},
           {"success_count", s.success_count},
           {"scopes", s.scopes}};
}

void from_json(const json& j, Skill& s) {
  s.name = j.at("name").get<std::string>();
  s.goal = j.at("goal").get<std::string>();
  s.preconditions = checks_from(j.at("preconditions"), "skill.preconditions");
  s.steps = subgoals_from(j.at("steps"), "skill.steps");
  s.success_checks = checks_from(j.at("success_checks"), "skill.success_checks");
  s.effects = j.at("effects").get<InvDelta>();
  s.effect_predicates = j.value("effect_predicates", std::vector<std::string>{});
  s.provenance = j.value("provenance", std::vector<std::string>{});
  s.use_count = j.value("use_count", 0);
  s.success_count = j.value("success_count", 0);
  s.scopes = j.value("scopes", std::set<std::string>{});
  s.check();
}

void to_json(json& j, const GuardTrigger& t) {
  j = json::object();
  if (t.task_kind) j["task_kind"] = to_string(*t.task_kind);
  if (t.reason) j["reason"] = to_string(*t.reason);
  if (t.cond_sig) j["cond_sig"] = hex64(*t.cond_sig);
  if (t.spatial_cell) j["spatial_cell"] = hex64(*t.spatial_cell);
  if (!t.tags.empty()) j["tags"] = t.tags;
  if (t.goal_pattern) j["goal_pattern"] = *t.goal_pattern;
  if (!t.lacking.empty()) j["lacking"] = t.lacking;
}

void from_json(const json& j, GuardTrigger& t) {
  t = {};
  if (j.contains("task_kind")) {
    t.task_kind = parse_task_kind(j.at("task_kind").get<std::string>());
    if (!t.task_kind) throw SchemaError("trigger.task_kind", "unknown value");
  }
  if (j.contains("reason")) {
    t.reason = parse_failure_reason(j.at("reason").get<std::string>());
    if (!t.reason) throw SchemaError("trigger.reason", "unknown value");
  }
  if (j.contains("cond_sig")) t.cond_sig = std::stoull(j.at("cond_sig").get<std::string>(), nullptr, 16);
  if (j.contains("spatial_cell")) t.spatial_cell = std::stoull(j.at("spatial_cell").get<std::string>(), nullptr, 16);
  if (j.contains("tags")) t.tags = j.at("tags").get<std::set<std::string>>();
  if (j.contains("goal_pattern")) t.goal_pattern = j.at("goal_pattern").get<std::string>();
  if (j.contains("lacking")) t.lacking = j.at("lacking").get<std::set<std::string>>();
}

void to_json(json& j, const Guardrail& g) {
  json req = json::array();
  for (const auto& r : g.require) req.push_back(r);
  j = json{{"guard_id", g.guard_id},
           {"level", to_string(g.level)},
           {"trigger", g.trigger},
           {"forbid", g.forbid ? json(*g.forbid) : json(nullptr)},
           {"require", req},
           {"consequence", g.consequence},
           {"consequence_reason", g.consequence_reason ? json(to_string(*g.consequence_reason)) : json(nullptr)},
           {"indicators", g.indicators},
           {"provenance", g.provenance},
           {"hit_count", g.hit_count},
           {"scopes", g.scopes}};
}

void from_json(const json& j, Guardrail& g) {
  g.guard_id = j.at("guard_id").get<std::string>();
  auto lvl = parse_level(j.at("level").get<std::string>());
  if (!lvl) throw SchemaError("guardrail.level", "unknown value");
  g.level = *lvl;
  g.trigger = j.at("trigger").get<GuardTrigger>();
  g.forbid = j.at("forbid").is_null() ? std::nullopt : std::optional(j.at("forbid").get<std::string>());
  g.require = subgoals_from(j.at("require"), "guardrail.require");
  g.consequence = j.value("consequence", "");
  g.consequence_reason.reset();
  if (j.contains("consequence_reason") && !j.at("consequence_reason").is_null())
    g.consequence_reason = parse_failure_reason(j.at("consequence_reason").get<std::string>());
  g.indicators = j.value("indicators", Indicators{});
  g.provenance = j.value("provenance", std::vector<std::string>{});
  g.hit_count = j.value("hit_count", 0);
  g.scopes = j.value("scopes", std::set<std::string>{});
  g.check();
}

bool glob_match(const std::string& pattern, const std::string& text) {
  return fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

namespace {

std::string normalize_goal(const std::string& goal) {
  if (auto g = parse_goal(goal)) return g->verb + " " + g->item;
  std::string out;
  for (const auto& t : tokenize(goal)) out += (out.empty() ? "" : " ") + t;
  return out;
}

}  // namespace

bool trigger_matches(const GuardTrigger& t, const MatchContext& ctx) {
  if (t.task_kind && std::find(ctx.task_kinds.begin(), ctx.task_kinds.end(), *t.task_kind) == ctx.task_kinds.end())
    return false;
  if (t.cond_sig && std::find(ctx.cond_sigs.begin(), ctx.cond_sigs.end(), *t.cond_sig) == ctx.cond_sigs.end())
    return false;
  if (t.spatial_cell && ctx.spatial_cell && *t.spatial_cell != *ctx.spatial_cell) return false;
  if (t.reason && ctx.reason && *t.reason != *ctx.reason) return false;
  for (const auto& tag : t.tags)
    if (!ctx.tags.contains(tag)) return false;
  if (t.goal_pattern && !glob_match(*t.goal_pattern, normalize_goal(ctx.goal))) return false;
  for (const auto& item : t.lacking) {
    auto it = ctx.available.find(item);
    if (it != ctx.available.end() && it->second > 0) return false;
  }
  return true;
}

std::vector<Guardrail> match_guardrails(const KnowledgeBase& kb, const MatchContext& ctx) {
  std::vector<Guardrail> out;
  for (const auto& g : kb.guardrails())
    if (trigger_matches(g.trigger, ctx)) out.push_back(g);
  std::sort(out.begin(), out.end(), [](const Guardrail& a, const Guardrail& b) {
    if (a.level != b.level) return a.level == GuardLevel::task;
    return a.guard_id < b.guard_id;
  });
  return out;
}

CommitResult KnowledgeBase::commit(Skill s, const std::string& group) {
  s.check();
  if (!group.empty()) s.scopes.insert(group);
  s.scopes.insert("global");
  std::sort(s.provenance.begin(), s.provenance.end());
  s.provenance.erase(std::unique(s.provenance.begin(), s.provenance.end()), s.provenance.end());
  const std::string sig = s.signature();
  for (auto& existing : skills_) {
    if (existing.signature() != sig) continue;
    Skill merged = existing;
    merge_sorted(merged.provenance, s.provenance);
    merged.scopes.insert(s.scopes.begin(), s.scopes.end());
    merged.use_count += s.use_count;
    merged.success_count += s.success_count;
    const bool changed = !(merged == existing);
    if (changed) {
      existing = std::move(merged);
      ++version_;
      lineage_.push_back({version_, "merge", existing.name});
    }
    return {existing.name, false, changed};
  }
  std::string name = s.name;
  for (int n = 2; find_skill(name); ++n) name = s.name + "_" + std::to_string(n);
  s.name = name;
  skills_.push_back(std::move(s));
  ++version_;
  lineage_.push_back({version_, "insert", name});
  return {name, true, true};
}

CommitResult KnowledgeBase::commit(Guardrail g, const std::string& group) {
  g.check();
  if (!group.empty()) g.scopes.insert(group);
  g.scopes.insert("global");
  std::sort(g.provenance.begin(), g.provenance.end());
  g.provenance.erase(std::unique(g.provenance.begin(), g.provenance.end()), g.provenance.end());
  g.guard_id = "g_" + hex64(fnv1a64(g.signature())).substr(0, 12);
  for (auto& existing : guardrails_) {
    if (existing.guard_id != g.guard_id) continue;
    Guardrail merged = existing;
    merge_sorted(merged.provenance, g.provenance);
    merged.scopes.insert(g.scopes.begin(), g.scopes.end());
    const bool changed = !(merged == existing);
    if (changed) {
      existing = std::move(merged);
      ++version_;
      lineage_.push_back({version_, "merge", existing.guard_id});
    }
    return {existing.guard_id, false, changed};
  }
  const std::string id = g.guard_id;
  guardrails_.push_back(std::move(g));
  ++version_;
  lineage_.push_back({version_, "insert", id});
  return {id, true, true};
}

std::vector<const Skill*> KnowledgeBase::skills_in_scope(const std::string& scope) const {
  std::vector<const Skill*> out;
  for (const auto& s : skills_)
    if (s.scopes.contains(scope)) out.push_back(&s);
  return out;
}

std::vector<const Guardrail*> KnowledgeBase::guardrails_in_scope(const std::string& scope) const {
  std::vector<const Guardrail*> out;
  for (const auto& g : guardrails_)
    if (g.scopes.contains(scope)) out.push_back(&g);
  return out;
}

const Guardrail* KnowledgeBase::find_guard(const std::string& id) const {
  for (const auto& g : guardrails_)
    if (g.guard_id == id) return &g;
  return nullptr;
}

const Skill* KnowledgeBase::find_skill(const std::string& name) const {
  for (const auto& s : skills_)
    if (s.name == name) return &s;
  return nullptr;
}

void KnowledgeBase::record_skill_use(const std::string& name, bool success) {
  for (auto& s : skills_)
    if (s.name == name) {
      ++s.use_count;
      if (success) ++s.success_count;
    }
}

void KnowledgeBase::record_guard_hit(const std::string& id) {
  for (auto& g : guardrails_)
    if (g.guard_id == id) ++g.hit_count;
}

json KnowledgeBase::to_json() const {
  json skills = json::array(), guards = json::array(), lineage = json::array();
  for (const auto& s : skills_) skills.push_back(s);
  for (const auto& g : guardrails_) guards.push_back(g);
  for (const auto& l : lineage_) lineage.push_back({{"item_id", l.item_id}, {"kind", l.kind}, {"version", l.version}});
  return json{{"guardrails", guards}, {"lineage", lineage}, {"skills", skills}, {"version", version_}};
}

KnowledgeBase KnowledgeBase::from_json(const json& j) {
  KnowledgeBase kb;
  for (const auto& s : j.at("skills")) kb.skills_.push_back(s.get<Skill>());
  for (const auto& g : j.at("guardrails")) kb.guardrails_.push_back(g.get<Guardrail>());
  kb.version_ = j.at("version").get<std::int64_t>();
  for (const auto& l : j.value("lineage", json::array()))
    kb.lineage_.push_back({l.at("version").get<std::int64_t>(), l.at("kind").get<std::string>(),
                           l.at("item_id").get<std::string>()});
  return kb;
}

}  // namespace evo
