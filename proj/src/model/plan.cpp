#include "evo/model/plan.hpp"

#include <set>
#include <sstream>

#include "evo/error.hpp"
#include "evo/sim/registry.hpp"

namespace evo {

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw SchemaError(path + "." + key, "missing required field");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::int64_t require_int(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) throw SchemaError(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

double require_number(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
  return v.get<double>();
}

std::string require_item(const json& obj, const std::string& path, bool strict) {
  std::string item = require_string(obj, "item", path);
  if (strict && !sim::is_item(item)) throw SchemaError(path + ".item", "unknown item '" + item + "'");
  return item;
}

}  // namespace

int count_tokens(std::string_view text) {
  std::istringstream in{std::string(text)};
  int n = 0;
  for (std::string tok; in >> tok;) ++n;
  return n;
}

CheckSpec validate_check(const json& raw, const std::string& path, bool strict) {
  if (!raw.is_object()) throw SchemaError(path, "expected an object");
  const std::string type = require_string(raw, "type", path);
  const auto kind = parse_check_kind(type);
  if (!kind) throw SchemaError(path + ".type", "unknown check type '" + type + "'");

  CheckSpec c;
  c.kind = *kind;
  auto positive_n = [&](std::int64_t min) {
    const std::int64_t n = require_int(raw, "n", path);
    if (n < min) throw SchemaError(path + ".n", "must be >= " + std::to_string(min));
    c.n = n;
  };
  switch (*kind) {
    case CheckKind::inv_ge:
    case CheckKind::inv_delta_ge:
      c.item = require_item(raw, path, strict);
      positive_n(1);
      break;
    case CheckKind::equipped_is:
    case CheckKind::crafted_contains: c.item = require_item(raw, path, strict); break;
    case CheckKind::coord_near: {
      const json& t = require(raw, "target", path);
      if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number() || !t[2].is_number())
        throw SchemaError(path + ".target", "expected [x,y,z]");
      c.target = t.get<Vec3>();
      if (!c.target->finite()) throw SchemaError(path + ".target", "must be finite");
      c.radius = require_number(raw, "radius", path);
      if (!(*c.radius > 0.0)) throw SchemaError(path + ".radius", "must be > 0");
      break;
    }
    case CheckKind::coord_moved_ge:
      c.radius = require_number(raw, "radius", path);
      if (!(*c.radius > 0.0)) throw SchemaError(path + ".radius", "must be > 0");
      break;
    case CheckKind::gui_events_ge:
    case CheckKind::furnace_cook_ge:
    case CheckKind::container_count_ge: positive_n(1); break;
    case CheckKind::world_time_ge: positive_n(0); break;
    case CheckKind::gui_is_open:
    case CheckKind::gui_is_closed:
    case CheckKind::furnace_burn_active: break;
  }
  return c;
}

SubgoalSpec validate_subgoal(const json& raw, const std::string& path, bool strict) {
  if (!raw.is_object()) throw SchemaError(path, "expected an object");
  SubgoalSpec sg;
  sg.subgoal_id = require_string(raw, "subgoal_id", path);
  if (sg.subgoal_id.empty()) throw SchemaError(path + ".subgoal_id", "must be nonempty");

  sg.condition = require_string(raw, "condition", path);
  const int tokens = count_tokens(sg.condition);
  if (tokens == 0) throw SchemaError(path + ".condition", "must be nonempty");
  if (strict && tokens > kMaxConditionTokens)
    throw SchemaError(path + ".condition", "more than " + std::to_string(kMaxConditionTokens) + " tokens");

  const std::int64_t timeout = require_int(raw, "timeout_s", path);
  if (timeout <= 0) throw SchemaError(path + ".timeout_s", "must be > 0");
  if (timeout > 3600) throw SchemaError(path + ".timeout_s", "must be <= 3600");
  sg.timeout_s = static_cast<int>(timeout);

  const std::string kind = require_string(raw, "task_kind", path);
  const auto tk = parse_task_kind(kind);
  if (!tk) throw SchemaError(path + ".task_kind", "unknown task_kind '" + kind + "'");
  sg.task_kind = *tk;

  if (auto it = raw.find("executor_hint"); it != raw.end()) {
    if (!it->is_string()) throw SchemaError(path + ".executor_hint", "expected a string");
    const auto hint = parse_executor_hint(it->get<std::string>());
    if (!hint) throw SchemaError(path + ".executor_hint", "unknown executor_hint '" + it->get<std::string>() + "'");
    sg.executor_hint = *hint;
  }
  if (auto it = raw.find("mode"); it != raw.end()) {
    if (!it->is_string()) throw SchemaError(path + ".mode", "expected a string");
    const auto mode = parse_mode(it->get<std::string>());
    if (!mode) throw SchemaError(path + ".mode", "unknown mode '" + it->get<std::string>() + "'");
    sg.mode = *mode;
  }

  const json& checks = require(raw, "checks", path);
  if (!checks.is_array()) throw SchemaError(path + ".checks", "expected an array");
  for (std::size_t i = 0; i < checks.size(); ++i)
    sg.checks.push_back(validate_check(checks[i], path + ".checks[" + std::to_string(i) + "]", strict));
  return sg;
}

PlanSpec validate_plan(const json& raw) {
  if (!raw.is_object()) throw SchemaError("plan", "expected a JSON object");
  PlanSpec plan;
  plan.plan_id = require_string(raw, "plan_id", "plan");
  if (plan.plan_id.empty()) throw SchemaError("plan.plan_id", "must be nonempty");

  const json& subgoals = require(raw, "subgoals", "plan");
  if (!subgoals.is_array()) throw SchemaError("plan.subgoals", "expected an array");
  if (subgoals.empty()) throw SchemaError("plan.subgoals", "must contain at least one subgoal");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < subgoals.size(); ++i) {
    const std::string path = "plan.subgoals[" + std::to_string(i) + "]";
    SubgoalSpec sg = validate_subgoal(subgoals[i], path);
    if (!ids.insert(sg.subgoal_id).second)
      throw SchemaError(path + ".subgoal_id", "duplicate subgoal_id '" + sg.subgoal_id + "'");
    plan.subgoals.push_back(std::move(sg));
  }

  if (auto it = raw.find("global_constraints"); it != raw.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError("plan.global_constraints", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_string())
        throw SchemaError("plan.global_constraints[" + std::to_string(i) + "]", "expected a string");
      plan.global_constraints.push_back((*it)[i].get<std::string>());
    }
  }
  return plan;
}

PlanSpec validate_plan_text(std::string_view text) {
  json raw;
  try {
    raw = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("plan", std::string("not valid JSON: ") + e.what());
  }
  return validate_plan(raw);
}

json serialize_plan(const PlanSpec& plan) {
  json subgoals = json::array();
  for (const auto& sg : plan.subgoals) subgoals.push_back(sg);
  return json{{"global_constraints", plan.global_constraints}, {"plan_id", plan.plan_id}, {"subgoals", subgoals}};
}

InvDelta inventory_delta(const Inventory& pre, const Inventory& post) {
  InvDelta d;
  for (const auto& [item, n] : post) {
    auto it = pre.find(item);
    const int diff = n - (it == pre.end() ? 0 : it->second);
    if (diff != 0) d[item] = diff;
  }
  for (const auto& [item, n] : pre)
    if (!post.contains(item) && n != 0) d[item] = -n;
  return d;
}

StateDiff compute_state_diff(const StateSnapshot& pre, const StateSnapshot& post) {
  if (pre.episode_id != post.episode_id)
    throw ContractViolation("compute_state_diff: snapshots from different episodes ('" + pre.episode_id +
                            "' vs '" + post.episode_id + "')");
  StateDiff d;
  d.inventory = inventory_delta(pre.inventory, post.inventory);
  d.displacement = post.coords - pre.coords;
  d.gui_before = pre.gui_state;
  d.gui_after = post.gui_state;
  d.world_time_delta = post.world_time - pre.world_time;
  return d;
}

}  // namespace evo
