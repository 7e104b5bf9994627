#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evo/model/types.hpp"
#include "evo/sim/registry.hpp"

namespace evo {

// Goals are written "<verb> <item>", e.g. "craft wooden_pickaxe".
struct Goal {
  std::string verb;
  std::string item;
  int count = 1;
};

// Accepts "craft wooden_pickaxe", "craft wooden pickaxe", "mine 3 oak_log".
std::optional<Goal> parse_goal(std::string_view text);
std::string goal_text(const std::string& item);

// Subgoal that obtains `item` until the inventory holds at least `n`.
SubgoalSpec subgoal_for(const std::string& item, int n, const sim::RecipeGraph& g = sim::RecipeGraph::standard());

// Item a template subgoal produces (its first inv_ge check), if any.
std::optional<std::string> produced_item(const SubgoalSpec& sg);

// Immediate prerequisites of obtaining `item`: station first, then recipe
// inputs by name, then fuel; for mined items the pickaxe the block needs.
std::vector<std::string> direct_prerequisites(const std::string& item,
                                              const sim::RecipeGraph& g = sim::RecipeGraph::standard());

// Transitive closure of direct_prerequisites (excluding `item`).
std::vector<std::string> all_prerequisites(const std::string& item,
                                           const sim::RecipeGraph& g = sim::RecipeGraph::standard());

}  // namespace evo
