#include "evo/sim/registry.hpp"

#include <algorithm>
#include <array>

namespace evo::sim {

namespace {

constexpr std::array<std::string_view, kBlockCount> kBlockNames = {
    "air",  "dirt",  "grass",          "stone",   "oak_log", "iron_ore",
    "lava", "water", "crafting_table", "furnace", "bedrock",
};

}  // namespace

std::string_view block_name(Block b) { return kBlockNames.at(static_cast<std::size_t>(b)); }

std::optional<Block> parse_block(std::string_view name) {
  if (name.starts_with("minecraft:")) name.remove_prefix(10);
  for (std::size_t i = 0; i < kBlockNames.size(); ++i) {
    if (kBlockNames[i] == name) return static_cast<Block>(i);
  }
  return std::nullopt;
}

bool is_passable(Block b) { return b == Block::air || b == Block::water || b == Block::lava; }
bool is_solid(Block b) { return !is_passable(b); }

std::string_view tier_name(Tier t) {
  switch (t) {
    case Tier::hand: return "hand";
    case Tier::wooden: return "wooden";
    case Tier::stone: return "stone";
    case Tier::iron: return "iron";
  }
  return "hand";
}

Tier tool_tier(std::string_view item) {
  if (item == "wooden_pickaxe") return Tier::wooden;
  if (item == "stone_pickaxe") return Tier::stone;
  if (item == "iron_pickaxe") return Tier::iron;
  return Tier::hand;
}

std::string pickaxe_for(Tier t) {
  switch (t) {
    case Tier::hand: return {};
    case Tier::wooden: return "wooden_pickaxe";
    case Tier::stone: return "stone_pickaxe";
    case Tier::iron: return "iron_pickaxe";
  }
  return {};
}

const std::set<std::string>& item_names() {
  static const std::set<std::string> names = {
      "cobblestone", "crafting_table", "dirt",       "furnace",      "iron_ingot",
      "iron_ore",    "iron_pickaxe",   "oak_log",    "plank",        "stick",
      "stone_pickaxe", "wooden_pickaxe",
  };
  return names;
}

bool is_item(std::string_view name) { return item_names().contains(std::string(name)); }

bool is_station_item(std::string_view item) { return item == "crafting_table" || item == "furnace"; }

std::optional<Block> placed_block(std::string_view item) {
  if (item == "dirt") return Block::dirt;
  if (item == "cobblestone") return Block::stone;
  if (item == "oak_log") return Block::oak_log;
  if (item == "crafting_table") return Block::crafting_table;
  if (item == "furnace") return Block::furnace;
  return std::nullopt;
}

std::string_view station_name(Station s) {
  switch (s) {
    case Station::none: return "none";
    case Station::table: return "table";
    case Station::furnace: return "furnace";
  }
  return "none";
}

std::string station_item(Station s) {
  switch (s) {
    case Station::none: return {};
    case Station::table: return "crafting_table";
    case Station::furnace: return "furnace";
  }
  return {};
}

RecipeGraph::RecipeGraph() {
  recipes_ = {
      {"crafting_table", {{"plank", 4}}, Station::none, {{"crafting_table", 1}}, std::nullopt},
      {"furnace", {{"cobblestone", 8}}, Station::table, {{"furnace", 1}}, std::nullopt},
      {"iron_ingot", {{"iron_ore", 1}}, Station::furnace, {{"iron_ingot", 1}}, "plank"},
      {"iron_pickaxe", {{"iron_ingot", 3}, {"stick", 2}}, Station::table, {{"iron_pickaxe", 1}}, std::nullopt},
      {"plank", {{"oak_log", 1}}, Station::none, {{"plank", 4}}, std::nullopt},
      {"stick", {{"plank", 2}}, Station::none, {{"stick", 4}}, std::nullopt},
      {"stone_pickaxe", {{"cobblestone", 3}, {"stick", 2}}, Station::table, {{"stone_pickaxe", 1}}, std::nullopt},
      {"wooden_pickaxe", {{"plank", 3}, {"stick", 2}}, Station::table, {{"wooden_pickaxe", 1}}, std::nullopt},
  };
  std::sort(recipes_.begin(), recipes_.end(), [](const Recipe& a, const Recipe& b) { return a.id < b.id; });
}

const RecipeGraph& RecipeGraph::standard() {
  static const RecipeGraph graph;
  return graph;
}

const Recipe* RecipeGraph::find(std::string_view id) const {
  for (const auto& r : recipes_)
    if (r.id == id) return &r;
  return nullptr;
}

const Recipe* RecipeGraph::producer(std::string_view item) const {
  // recipes_ is sorted by id, so the first hit is the smallest id.
  for (const auto& r : recipes_)
    if (r.outputs.contains(std::string(item))) return &r;
  return nullptr;
}

std::optional<Block> RecipeGraph::source_block(std::string_view item) const {
  if (item == "oak_log") return Block::oak_log;
  if (item == "cobblestone") return Block::stone;
  if (item == "iron_ore") return Block::iron_ore;
  if (item == "dirt") return Block::dirt;
  return std::nullopt;
}

MiningRule RecipeGraph::mining_rule(Block b) const {
  switch (b) {
    case Block::dirt:
    case Block::grass: return {Tier::hand, "dirt", true};
    case Block::oak_log: return {Tier::hand, "oak_log", true};
    case Block::crafting_table: return {Tier::hand, "crafting_table", true};
    case Block::stone: return {Tier::wooden, "cobblestone", true};
    case Block::furnace: return {Tier::wooden, "furnace", true};
    case Block::iron_ore: return {Tier::stone, "iron_ore", true};
    case Block::air:
    case Block::lava:
    case Block::water:
    case Block::bedrock: return {Tier::hand, std::nullopt, false};
  }
  return {Tier::hand, std::nullopt, false};
}

int RecipeGraph::break_ticks(Block b, Tier t) const {
  const MiningRule rule = mining_rule(b);
  if (!rule.breakable) return -1;
  if (t < rule.min_tier) return kInsufficientTierTicks;
  switch (b) {
    case Block::dirt:
    case Block::grass:
    case Block::oak_log:
    case Block::crafting_table: return 10;
    case Block::stone:
    case Block::furnace: return t == Tier::wooden ? 30 : (t == Tier::stone ? 15 : 10);
    case Block::iron_ore: return t == Tier::stone ? 30 : 20;
    default: return -1;
  }
}

}  // namespace evo::sim
