#pragma once

#include <string>
#include <vector>

#include "evo/controller/controller.hpp"

namespace evo {

// The shipped tech-tree curriculum: wooden, stone and iron groups.
std::vector<TaskSpec> standard_suite();
const TaskSpec& find_task(const std::vector<TaskSpec>& suite, const std::string& task_id);
std::vector<TaskSpec> tasks_in_group(const std::vector<TaskSpec>& suite, const std::string& group);

// Init commands that build a walled yard east of spawn holding an iron
// column. Every floor-level approach is lava-adjacent; a raised walkway
// reached from the far end of the yard is the only safe one.
std::vector<std::string> hazard_overlay();
TaskSpec with_hazard(TaskSpec t);

// Suite from a JSON or YAML document: a list of tasks or {"tasks": [...]}.
std::vector<TaskSpec> load_suite(const std::string& path);

}  // namespace evo
