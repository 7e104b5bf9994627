#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace evo::sim {

enum class Block : std::uint8_t {
  air = 0,
  dirt,
  grass,
  stone,
  oak_log,
  iron_ore,
  lava,
  water,
  crafting_table,
  furnace,
  bedrock,
};

inline constexpr int kBlockCount = 11;

std::string_view block_name(Block b);
std::optional<Block> parse_block(std::string_view name);  // accepts "minecraft:" prefix

bool is_solid(Block b);     // agent cannot occupy, supports standing
bool is_passable(Block b);  // air, water, lava

enum class Tier : std::uint8_t { hand = 0, wooden = 1, stone = 2, iron = 3 };

std::string_view tier_name(Tier t);
// Tier granted by holding `item`; hand for anything that is not a pickaxe.
Tier tool_tier(std::string_view item);
// Cheapest pickaxe item granting `t`; empty for hand.
std::string pickaxe_for(Tier t);

// Closed item registry: lowercase snake_case names.
const std::set<std::string>& item_names();
bool is_item(std::string_view name);
// Items that are placed as crafting stations.
bool is_station_item(std::string_view item);
// Items that can be placed as a block, with the block they become.
std::optional<Block> placed_block(std::string_view item);

enum class Station : std::uint8_t { none, table, furnace };
std::string_view station_name(Station s);
// Item that must be placed in the world to use `s` (empty for none).
std::string station_item(Station s);

struct Recipe {
  std::string id;
  std::map<std::string, int> inputs;
  Station station = Station::none;
  std::map<std::string, int> outputs;
  std::optional<std::string> fuel;  // furnace recipes only; one unit per output
};

struct MiningRule {
  Tier min_tier = Tier::hand;
  std::optional<std::string> drop;
  bool breakable = true;
};

class RecipeGraph {
 public:
  static const RecipeGraph& standard();

  const std::vector<Recipe>& recipes() const { return recipes_; }
  const Recipe* find(std::string_view id) const;
  // Lexicographically smallest recipe id producing `item`.
  const Recipe* producer(std::string_view item) const;
  // Block a raw item is mined from, if the item is gathered rather than crafted.
  std::optional<Block> source_block(std::string_view item) const;

  MiningRule mining_rule(Block b) const;
  // Ticks of consecutive `mine` actions needed to break `b` holding a tool of tier `t`.
  int break_ticks(Block b, Tier t) const;

  static constexpr int kInsufficientTierTicks = 60;
  static constexpr int kCookTicks = 20;
  static constexpr int kFuelBurnTicks = 20;

 private:
  RecipeGraph();
  std::vector<Recipe> recipes_;
};

}  // namespace evo::sim
