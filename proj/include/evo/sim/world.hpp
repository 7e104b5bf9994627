#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evo/diagnosis/diagnosis.hpp"
#include "evo/model/types.hpp"
#include "evo/sim/registry.hpp"

namespace evo::sim {

inline constexpr int kTicksPerSecond = 20;
inline constexpr double kLavaDamage = 2.0;

struct Cell {
  int x = 0, y = 0, z = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
  Cell operator+(const Cell& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 vec() const { return {double(x), double(y), double(z)}; }
};

enum class Facing : std::uint8_t { north, east, south, west };  // -z, +x, +z, -x
enum class Pitch : std::uint8_t { up, level, down };
enum class GuiKind : std::uint8_t { closed, inventory, table, furnace };

std::string_view facing_name(Facing f);
std::optional<Facing> parse_facing(std::string_view s);
Cell facing_offset(Facing f);

enum class ActionType : std::uint8_t {
  move, turn, pitch, jump, mine, place, open_gui, close_gui, craft, smelt_load, smelt_collect, select, use, noop,
};

std::string_view action_name(ActionType t);

struct Action {
  ActionType type = ActionType::noop;
  std::string arg;

  static Action noop() { return {}; }
  std::string str() const;
};

// Parses "move north", "craft plank", "select 2"; nullopt for an unknown verb.
std::optional<Action> parse_action(std::string_view text);

enum class StepStatus : std::uint8_t { ok, rejected_malformed, precondition_failed };

struct StepResult {
  StepStatus status = StepStatus::ok;
  bool terminated = false;
  std::string message;
};

struct FurnaceState {
  std::string input;
  int input_count = 0;
  int fuel_count = 0;
  int burn_remaining = 0;
  int cook_progress = 0;
  std::string output;
  int output_count = 0;
  friend bool operator==(const FurnaceState&, const FurnaceState&) = default;
};

struct WorldConfig {
  int size_x = 32;
  int size_y = 8;
  int size_z = 32;
  Cell spawn{16, 4, 16};
  int trees_min = 8;
  int trees_max = 12;
  int outcrops = 3;
};

// Deterministic voxel world. Single owner; not thread-safe.
class World {
 public:
  explicit World(WorldConfig cfg = {});

  // Regenerates terrain from `seed`, places the agent at spawn with an empty
  // inventory and applies init commands. Throws ResetError naming a bad command.
  StateSnapshot reset(std::uint64_t seed, const std::vector<std::string>& init_commands = {},
                      const std::string& episode_id = "ep");

  StepResult step(const Action& a);
  StepResult step(std::string_view action_text);

  // Starts a new attempt window for the windowed snapshot fields.
  void mark_attempt();
  StateSnapshot snapshot() const;
  TraceStep trace_step() const;

  // Text dump of the complete state; equal dumps mean equal worlds.
  std::string dump() const;

  // Queries used by executors and tests.
  Block block(const Cell& c) const;
  void set_block(const Cell& c, Block b);
  bool in_bounds(const Cell& c) const;
  // Agent can occupy `c` standing on solid ground.
  bool standable(const Cell& c) const;
  // Lava within Chebyshev distance 1.
  bool hazardous(const Cell& c) const;
  Cell agent() const { return agent_; }
  Facing facing() const { return facing_; }
  Pitch pitch() const { return pitch_; }
  Cell faced_cell() const;
  const Inventory& inventory() const { return inventory_; }
  int count(const std::string& item) const;
  std::string selected_item() const;
  const std::vector<std::string>& hotbar() const { return hotbar_; }
  GuiKind gui() const { return gui_; }
  double health() const { return health_; }
  double hunger() const { return hunger_; }
  std::int64_t tick() const { return tick_; }
  std::int64_t world_time() const { return time_base_ + tick_; }
  bool terminated() const { return terminated_; }
  const std::map<Cell, FurnaceState>& furnaces() const { return furnaces_; }
  const WorldConfig& config() const { return cfg_; }
  const RecipeGraph& recipes() const { return *recipes_; }
  std::uint64_t seed() const { return seed_; }
  // Bumped on every block change.
  std::uint64_t revision() const { return revision_; }
  // Forces termination (used for fault injection in tests).
  void terminate(const std::string& why);

 private:
  void generate(std::uint64_t seed);
  void apply_command(const std::string& cmd);
  void settle();
  void apply_gravity();
  void tick_world();
  void give(const std::string& item, int n);
  bool take(const std::string& item, int n);
  StepResult do_step(const Action& a);

  WorldConfig cfg_;
  const RecipeGraph* recipes_;
  std::vector<Block> grid_;
  std::uint64_t seed_ = 0;
  std::uint64_t revision_ = 0;
  std::string episode_id_;
  Cell agent_;
  Facing facing_ = Facing::north;
  Pitch pitch_ = Pitch::level;
  Inventory inventory_;
  std::vector<std::string> hotbar_;
  std::string selected_;
  GuiKind gui_ = GuiKind::closed;
  std::optional<Cell> focused_furnace_;
  std::map<Cell, FurnaceState> furnaces_;
  double health_ = 20.0;
  double hunger_ = 20.0;
  std::int64_t tick_ = 0;
  std::int64_t time_base_ = 0;
  std::int64_t last_damage_tick_ = -1000;
  bool terminated_ = false;
  std::string terminate_reason_;
  // Mining progress on the faced block.
  std::optional<Cell> mining_cell_;
  int mining_ticks_ = 0;
  // Attempt window.
  Cell mark_coords_;
  Inventory mark_inventory_;
  GuiEvents window_gui_;
  std::vector<std::string> window_crafted_;
  std::array<double, 3> sum_{}, sum_sq_{};
  std::int64_t window_n_ = 0;
};

}  // namespace evo::sim
