#pragma once

// Independent walk over the shipped recipe table for cross-checking the
// planner and the task-level distiller.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evo/model/types.hpp"
#include "evo/sim/registry.hpp"

namespace oracle {

inline std::vector<std::string> needs(const std::string& item) {
  static const std::map<std::string, std::string> mined_with = {{"cobblestone", "wooden_pickaxe"},
                                                                {"iron_ore", "stone_pickaxe"}};
  std::vector<std::string> out;
  const evo::sim::Recipe* best = nullptr;
  for (const auto& r : evo::sim::RecipeGraph::standard().recipes())
    if (r.outputs.count(item) && (!best || r.id < best->id)) best = &r;
  if (best) {
    if (best->station == evo::sim::Station::table) out.push_back("crafting_table");
    if (best->station == evo::sim::Station::furnace) out.push_back("furnace");
    for (auto& [in, n] : best->inputs) out.push_back(in);
    if (best->fuel) out.push_back(*best->fuel);
  } else if (mined_with.count(item)) {
    out.push_back(mined_with.at(item));
  }
  return out;
}

inline std::set<std::string> closure(const std::string& item) {
  std::set<std::string> seen;
  std::vector<std::string> stack{item};
  while (!stack.empty()) {
    auto x = stack.back();
    stack.pop_back();
    for (auto& p : needs(x))
      if (seen.insert(p).second) stack.push_back(p);
  }
  return seen;
}

// First prerequisite in breadth-first order from the goal that is not covered.
inline std::string first_uncovered(const std::string& goal, const std::set<std::string>& covered) {
  std::vector<std::string> queue{goal};
  std::set<std::string> seen{goal};
  for (std::size_t i = 0; i < queue.size(); ++i)
    for (auto& p : needs(queue[i])) {
      if (!covered.count(p)) return p;
      if (seen.insert(p).second) queue.push_back(p);
    }
  return "";
}

// Every producing subgoal's needs are held initially or produced earlier.
// A subgoal whose count is already held needs nothing; a pickaxe need is met
// by any pickaxe of at least that tier.
inline bool topological(const evo::PlanSpec& plan, const evo::Inventory& initial = {}) {
  static const std::map<std::string, int> rank = {{"wooden_pickaxe", 1}, {"stone_pickaxe", 2}, {"iron_pickaxe", 3}};
  std::set<std::string> have;
  for (auto& [k, v] : initial)
    if (v > 0) have.insert(k);
  auto met = [&](const std::string& p) {
    if (have.count(p)) return true;
    if (!rank.count(p)) return false;
    for (auto& h : have)
      if (rank.count(h) && rank.at(h) >= rank.at(p)) return true;
    return false;
  };
  for (const auto& sg : plan.subgoals) {
    std::string produced;
    long n = 1;
    for (const auto& c : sg.checks)
      if (c.kind == evo::CheckKind::inv_ge && c.item) {
        produced = *c.item;
        n = c.n.value_or(1);
        break;
      }
    if (produced.empty()) continue;
    auto it = initial.find(produced);
    if (it != initial.end() && it->second >= n) continue;
    for (auto& p : needs(produced))
      if (!met(p)) return false;
    have.insert(produced);
  }
  return true;
}

// Abstract dry run: each subgoal repeats its recipe or mining step until its
// inv_ge check holds. Stations are placed (consumed) on first use. Returns
// false as soon as an input, tool or station is missing.
inline bool dry_run(const evo::PlanSpec& plan, evo::Inventory inv, std::set<std::string> placed = {}) {
  static const std::map<std::string, std::string> mined_with = {{"cobblestone", "wooden_pickaxe"},
                                                                {"iron_ore", "stone_pickaxe"}};
  static const std::map<std::string, int> rank = {{"wooden_pickaxe", 1}, {"stone_pickaxe", 2}, {"iron_pickaxe", 3}};
  auto has_tool = [&](const std::string& tool) {
    for (auto& [k, v] : inv)
      if (v > 0 && rank.count(k) && rank.at(k) >= rank.at(tool)) return true;
    return false;
  };
  for (const auto& sg : plan.subgoals) {
    std::string item;
    long target = 0;
    for (const auto& c : sg.checks)
      if (c.kind == evo::CheckKind::inv_ge && c.item) {
        item = *c.item;
        target = c.n.value_or(1);
        break;
      }
    if (item.empty()) continue;
    int guard = 0;
    while (inv[item] < target) {
      if (++guard > 1000) return false;
      const evo::sim::Recipe* best = nullptr;
      for (const auto& r : evo::sim::RecipeGraph::standard().recipes())
        if (r.outputs.count(item) && (!best || r.id < best->id)) best = &r;
      if (best) {
        std::string station = best->station == evo::sim::Station::table     ? "crafting_table"
                               : best->station == evo::sim::Station::furnace ? "furnace"
                                                                             : "";
        if (!station.empty() && !placed.count(station)) {
          if (inv[station] < 1) return false;
          --inv[station];
          placed.insert(station);
        }
        for (auto& [in, n] : best->inputs) {
          if (inv[in] < n) return false;
          inv[in] -= n;
        }
        if (best->fuel) {
          if (inv[*best->fuel] < 1) return false;
          --inv[*best->fuel];
        }
        for (auto& [out, n] : best->outputs) inv[out] += n;
      } else {
        if (mined_with.count(item) && !has_tool(mined_with.at(item))) return false;
        ++inv[item];
      }
    }
  }
  return true;
}

}  // namespace oracle
