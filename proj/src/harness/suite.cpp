#include "evo/harness/suite.hpp"

#include <fstream>
#include <sstream>

#include "evo/error.hpp"
#include "evo/harness/yaml_json.hpp"

namespace evo {

namespace {

TaskSpec task(std::string id, std::string group, std::string goal, std::string item, int n, int budget = 6000) {
  TaskSpec t;
  t.task_id = std::move(id);
  t.group = std::move(group);
  t.goal = std::move(goal);
  CheckSpec c;
  c.kind = CheckKind::inv_ge;
  c.item = std::move(item);
  c.n = n;
  t.success_checks = {c};
  t.step_budget = budget;
  return t;
}

}  // namespace

std::vector<TaskSpec> standard_suite() {
  return {
      task("gather_logs", "wooden", "mine 3 oak_log", "oak_log", 3),
      task("craft_planks", "wooden", "craft 4 plank", "plank", 4),
      task("craft_wooden_pickaxe", "wooden", "craft wooden_pickaxe", "wooden_pickaxe", 1),
      task("mine_cobblestone", "stone", "mine 3 cobblestone", "cobblestone", 3),
      task("craft_stone_pickaxe", "stone", "craft stone_pickaxe", "stone_pickaxe", 1),
      task("craft_furnace", "stone", "craft furnace", "furnace", 1),
      task("smelt_iron_ingot", "iron", "smelt iron_ingot", "iron_ingot", 1),
      task("craft_iron_pickaxe", "iron", "craft iron_pickaxe", "iron_pickaxe", 1),
  };
}

const TaskSpec& find_task(const std::vector<TaskSpec>& suite, const std::string& task_id) {
  for (const auto& t : suite)
    if (t.task_id == task_id) return t;
  throw NotFound("task '" + task_id + "'");
}

std::vector<TaskSpec> tasks_in_group(const std::vector<TaskSpec>& suite, const std::string& group) {
  std::vector<TaskSpec> out;
  for (const auto& t : suite)
    if (t.group == group) out.push_back(t);
  return out;
}

std::vector<std::string> hazard_overlay() {
  return {
      "fill 0 0 0 31 7 31 stone replace iron_ore",
      // Walled yard east of spawn; the only way in is a gap in the west wall.
      "fill 17 3 12 28 3 20 grass",
      "fill 17 4 12 28 7 20 air",
      "fill 17 4 12 28 5 12 bedrock",
      "fill 17 4 20 28 5 20 bedrock",
      "fill 28 4 12 28 5 20 bedrock",
      "fill 17 4 12 17 5 20 bedrock",
      "fill 17 4 16 17 5 16 air",
      // Iron column whose floor-level faces all touch lava.
      "setblock 20 3 15 lava",
      "setblock 22 3 15 lava",
      "setblock 20 3 17 lava",
      "setblock 22 3 17 lava",
      "fill 21 4 16 21 6 16 iron_ore",
      // Raised walkway from the far end of the yard to the column's east face.
      "fill 22 4 16 26 4 16 bedrock",
  };
}

TaskSpec with_hazard(TaskSpec t) {
  auto extra = hazard_overlay();
  t.init_commands.insert(t.init_commands.end(), extra.begin(), extra.end());
  return t;
}

std::vector<TaskSpec> load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read suite " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json doc = parse_config_text(ss.str());
  if (doc.is_object() && doc.contains("tasks")) doc = doc.at("tasks");
  if (!doc.is_array()) throw ConfigError("suite must be a list of tasks");
  std::vector<TaskSpec> out;
  for (const auto& j : doc) out.push_back(j.get<TaskSpec>());
  return out;
}

}  // namespace evo
