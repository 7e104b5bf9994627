#include "evo/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "evo/error.hpp"

namespace evo::sim {

std::string_view facing_name(Facing f) {
  static constexpr std::string_view names[] = {"north", "east", "south", "west"};
  return names[static_cast<int>(f)];
}

std::optional<Facing> parse_facing(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (facing_name(static_cast<Facing>(i)) == s) return static_cast<Facing>(i);
  return std::nullopt;
}

Cell facing_offset(Facing f) {
  switch (f) {
    case Facing::north: return {0, 0, -1};
    case Facing::east: return {1, 0, 0};
    case Facing::south: return {0, 0, 1};
    case Facing::west: return {-1, 0, 0};
  }
  return {};
}

namespace {

constexpr std::string_view kActionNames[] = {"move",     "turn",      "pitch",     "jump",       "mine",
                                             "place",    "open_gui",  "close_gui", "craft",      "smelt_load",
                                             "smelt_collect", "select", "use",     "noop"};

// Uniform integer in [0, n) from the raw 64-bit stream; fixed across platforms.
int uniform(std::mt19937_64& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

int chebyshev2d(const Cell& a, const Cell& b) { return std::max(std::abs(a.x - b.x), std::abs(a.z - b.z)); }

}  // namespace

std::string_view action_name(ActionType t) { return kActionNames[static_cast<int>(t)]; }

std::string Action::str() const {
  std::string s(action_name(type));
  if (!arg.empty()) s += " " + arg;
  return s;
}

std::optional<Action> parse_action(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string verb, arg;
  in >> verb >> arg;
  for (int i = 0; i < static_cast<int>(std::size(kActionNames)); ++i)
    if (kActionNames[i] == verb) return Action{static_cast<ActionType>(i), arg};
  return std::nullopt;
}

World::World(WorldConfig cfg) : cfg_(cfg), recipes_(&RecipeGraph::standard()) {
  if (cfg_.size_x < 8 || cfg_.size_y < 6 || cfg_.size_z < 8) throw ConfigError("world too small");
  grid_.assign(static_cast<std::size_t>(cfg_.size_x * cfg_.size_y * cfg_.size_z), Block::air);
}

bool World::in_bounds(const Cell& c) const {
  return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < cfg_.size_x && c.y < cfg_.size_y && c.z < cfg_.size_z;
}

Block World::block(const Cell& c) const {
  if (!in_bounds(c)) return Block::bedrock;
  return grid_[static_cast<std::size_t>((c.y * cfg_.size_z + c.z) * cfg_.size_x + c.x)];
}

void World::set_block(const Cell& c, Block b) {
  if (!in_bounds(c)) return;
  ++revision_;
  grid_[static_cast<std::size_t>((c.y * cfg_.size_z + c.z) * cfg_.size_x + c.x)] = b;
  if (b == Block::furnace) furnaces_.try_emplace(c);
  else furnaces_.erase(c);
}

bool World::standable(const Cell& c) const {
  if (!in_bounds(c)) return false;
  const Block at = block(c);
  return (at == Block::air || at == Block::water) && is_solid(block(c + Cell{0, -1, 0}));
}

bool World::hazardous(const Cell& c) const {
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz)
        if (block(c + Cell{dx, dy, dz}) == Block::lava) return true;
  return false;
}

void World::generate(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::fill(grid_.begin(), grid_.end(), Block::air);
  furnaces_.clear();
  const Cell spawn = cfg_.spawn;
  const int ground = spawn.y - 1;
  for (int z = 0; z < cfg_.size_z; ++z)
    for (int x = 0; x < cfg_.size_x; ++x) {
      set_block({x, 0, z}, Block::bedrock);
      for (int y = 1; y < ground; ++y) set_block({x, y, z}, Block::stone);
      set_block({x, ground, z}, uniform(rng, 100) < 15 ? Block::dirt : Block::grass);
    }

  auto free_surface = [&](const Cell& c) {
    return block(c) == Block::air && block(c + Cell{0, -1, 0}) != Block::lava &&
           block(c + Cell{0, -1, 0}) != Block::water;
  };
  std::vector<Cell> occupied;
  auto far_from = [&](const Cell& c, int d) {
    return std::all_of(occupied.begin(), occupied.end(), [&](const Cell& o) { return chebyshev2d(o, c) >= d; });
  };

  // Stone outcrops, the first carrying a guaranteed iron vein.
  for (int k = 0; k < cfg_.outcrops; ++k) {
    Cell center;
    for (int tries = 0; tries < 200; ++tries) {
      center = {3 + uniform(rng, cfg_.size_x - 6), spawn.y, 3 + uniform(rng, cfg_.size_z - 6)};
      if (chebyshev2d(center, spawn) >= 7 && far_from(center, 7)) break;
    }
    occupied.push_back(center);
    for (int dz = -2; dz <= 2; ++dz)
      for (int dx = -2; dx <= 2; ++dx) {
        if (std::abs(dx) + std::abs(dz) > 3) continue;
        const Cell c = center + Cell{dx, 0, dz};
        if (!in_bounds(c) || uniform(rng, 100) >= 55) continue;
        set_block(c, Block::stone);
        if (uniform(rng, 100) < 35) set_block(c + Cell{0, 1, 0}, Block::stone);
      }
    // Vein on the rim so it has an open neighbour.
    const int vein = k == 0 ? 3 : uniform(rng, 2);
    Cell rim[] = {{2, 0, 0}, {-2, 0, 0}, {0, 0, 2}, {0, 0, -2}, {1, 0, 2}, {-1, 0, -2}};
    for (int v = 0; v < vein; ++v) {
      std::swap(rim[v], rim[v + uniform(rng, 6 - v)]);
      const Cell c = center + rim[v];
      if (in_bounds(c)) set_block(c, Block::iron_ore);
    }
    set_block(center, Block::stone);
  }

  // Hazards away from spawn and resources.
  auto place_pool = [&](Block b, int w, int d) {
    for (int tries = 0; tries < 400; ++tries) {
      Cell c{2 + uniform(rng, cfg_.size_x - 4 - w), ground, 2 + uniform(rng, cfg_.size_z - 4 - d)};
      if (chebyshev2d(c, spawn) < 8 || !far_from(c, 6)) continue;
      for (int dz = 0; dz < d; ++dz)
        for (int dx = 0; dx < w; ++dx) set_block(c + Cell{dx, 0, dz}, b);
      occupied.push_back(c);
      return;
    }
  };
  place_pool(Block::lava, 2, 2);
  place_pool(Block::water, 3, 2);

  // Trees by dart throwing with a minimum spacing.
  const int target = cfg_.trees_min + uniform(rng, cfg_.trees_max - cfg_.trees_min + 1);
  std::vector<Cell> trees;
  for (int tries = 0; tries < 400 && static_cast<int>(trees.size()) < target; ++tries) {
    Cell c{2 + uniform(rng, cfg_.size_x - 4), spawn.y, 2 + uniform(rng, cfg_.size_z - 4)};
    if (chebyshev2d(c, spawn) < 3 || !free_surface(c) || hazardous(c)) continue;
    if (!far_from(c, 4)) continue;
    if (std::any_of(trees.begin(), trees.end(), [&](const Cell& t) { return chebyshev2d(t, c) < 4; })) continue;
    trees.push_back(c);
    set_block(c, Block::oak_log);
    set_block(c + Cell{0, 1, 0}, Block::oak_log);
  }

  // Keep the spawn neighbourhood clear.
  for (int dz = -1; dz <= 1; ++dz)
    for (int dx = -1; dx <= 1; ++dx) {
      set_block(spawn + Cell{dx, 0, dz}, Block::air);
      set_block(spawn + Cell{dx, 1, dz}, Block::air);
      set_block(spawn + Cell{dx, -1, dz}, Block::grass);
    }
}

namespace {

std::vector<std::string> split(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::string strip_ns(std::string s) {
  if (s.rfind("minecraft:", 0) == 0) s = s.substr(10);
  return s;
}

}  // namespace

void World::apply_command(const std::string& raw) {
  auto toks = split(raw);
  if (toks.empty()) throw ResetError(raw, "empty command");
  std::string verb = toks[0];
  if (!verb.empty() && verb[0] == '/') verb = verb.substr(1);

  auto coord = [&](const std::string& t, int base) {
    try {
      if (!t.empty() && t[0] == '~') return base + (t.size() > 1 ? std::stoi(t.substr(1)) : 0);
      std::size_t pos = 0;
      int v = std::stoi(t, &pos);
      if (pos != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ResetError(raw, "bad coordinate '" + t + "'");
    }
  };
  auto cell_at = [&](std::size_t i) {
    return Cell{coord(toks.at(i), agent_.x), coord(toks.at(i + 1), agent_.y), coord(toks.at(i + 2), agent_.z)};
  };
  auto block_arg = [&](const std::string& t) {
    auto b = parse_block(t);
    if (!b) throw ResetError(raw, "unknown block '" + t + "'");
    return *b;
  };

  if (verb == "setblock") {
    if (toks.size() != 5) throw ResetError(raw, "usage: setblock x y z block");
    const Cell c = cell_at(1);
    if (!in_bounds(c)) throw ResetError(raw, "position out of bounds");
    set_block(c, block_arg(toks[4]));
  } else if (verb == "fill") {
    if (!(toks.size() == 8 || (toks.size() == 10 && toks[8] == "replace")))
      throw ResetError(raw, "usage: fill x1 y1 z1 x2 y2 z2 block [replace filter]");
    const Cell a = cell_at(1), b = cell_at(4);
    const Block blk = block_arg(toks[7]);
    const std::optional<Block> only = toks.size() == 10 ? std::optional<Block>(block_arg(toks[9])) : std::nullopt;
    if (!in_bounds(a) || !in_bounds(b)) throw ResetError(raw, "position out of bounds");
    for (int y = std::min(a.y, b.y); y <= std::max(a.y, b.y); ++y)
      for (int z = std::min(a.z, b.z); z <= std::max(a.z, b.z); ++z)
        for (int x = std::min(a.x, b.x); x <= std::max(a.x, b.x); ++x)
          if (!only || block({x, y, z}) == *only) set_block({x, y, z}, blk);
  } else if (verb == "give") {
    std::size_t i = 1;
    if (i < toks.size() && toks[i][0] == '@') ++i;
    if (i >= toks.size()) throw ResetError(raw, "usage: give [@p] item [count]");
    const std::string item = strip_ns(toks[i]);
    if (!is_item(item)) throw ResetError(raw, "unknown item '" + item + "'");
    int n = 1;
    if (i + 1 < toks.size()) {
      try {
        n = std::stoi(toks[i + 1]);
      } catch (const std::exception&) {
        throw ResetError(raw, "bad count");
      }
    }
    if (n < 1 || i + 2 < toks.size()) throw ResetError(raw, "bad count");
    give(item, n);
  } else if (verb == "time") {
    if (toks.size() != 3 || toks[1] != "set") throw ResetError(raw, "usage: time set <ticks|day|night>");
    std::int64_t t = 0;
    if (toks[2] == "day") t = 1000;
    else if (toks[2] == "night") t = 13000;
    else {
      try {
        t = std::stoll(toks[2]);
      } catch (const std::exception&) {
        throw ResetError(raw, "bad time");
      }
    }
    if (t < 0) throw ResetError(raw, "bad time");
    time_base_ = t - tick_;
  } else {
    throw ResetError(raw, "unsupported command '" + verb + "'");
  }
}

void World::apply_gravity() {
  while (agent_.y > 1 && is_passable(block(agent_ + Cell{0, -1, 0}))) --agent_.y;
}

void World::settle() {
  // Push the agent up out of solid blocks, then let it fall.
  while (is_solid(block(agent_)) && agent_.y + 1 < cfg_.size_y) ++agent_.y;
  apply_gravity();
}

StateSnapshot World::reset(std::uint64_t seed, const std::vector<std::string>& init_commands,
                           const std::string& episode_id) {
  seed_ = seed;
  episode_id_ = episode_id;
  generate(seed);
  agent_ = cfg_.spawn;
  facing_ = Facing::north;
  pitch_ = Pitch::level;
  inventory_.clear();
  hotbar_.clear();
  selected_.clear();
  gui_ = GuiKind::closed;
  focused_furnace_.reset();
  health_ = 20.0;
  hunger_ = 20.0;
  tick_ = 0;
  time_base_ = 0;
  last_damage_tick_ = -1000;
  terminated_ = false;
  terminate_reason_.clear();
  mining_cell_.reset();
  mining_ticks_ = 0;
  for (const auto& cmd : init_commands) apply_command(cmd);
  settle();
  mark_attempt();
  return snapshot();
}

void World::give(const std::string& item, int n) {
  if (n <= 0) return;
  inventory_[item] += n;
  if (std::find(hotbar_.begin(), hotbar_.end(), item) == hotbar_.end() && hotbar_.size() < 9) hotbar_.push_back(item);
}

bool World::take(const std::string& item, int n) {
  auto it = inventory_.find(item);
  if (it == inventory_.end() || it->second < n) return false;
  it->second -= n;
  if (it->second == 0) {
    inventory_.erase(it);
    std::erase(hotbar_, item);
    if (selected_ == item) selected_.clear();
  }
  return true;
}

int World::count(const std::string& item) const {
  auto it = inventory_.find(item);
  return it == inventory_.end() ? 0 : it->second;
}

std::string World::selected_item() const { return selected_; }

Cell World::faced_cell() const {
  Cell c = agent_ + facing_offset(facing_);
  if (pitch_ == Pitch::up) c.y += 1;
  if (pitch_ == Pitch::down) c.y -= 1;
  return c;
}

void World::terminate(const std::string& why) {
  terminated_ = true;
  terminate_reason_ = why;
}

void World::tick_world() {
  ++tick_;
  for (auto& [pos, f] : furnaces_) {
    if (f.input_count > 0 && f.burn_remaining == 0 && f.fuel_count > 0) {
      --f.fuel_count;
      f.burn_remaining = RecipeGraph::kFuelBurnTicks;
    }
    if (f.burn_remaining > 0) {
      --f.burn_remaining;
      if (f.input_count > 0) {
        if (++f.cook_progress >= RecipeGraph::kCookTicks) {
          f.cook_progress = 0;
          const Recipe* r = nullptr;
          for (const auto& rec : recipes_->recipes())
            if (rec.station == Station::furnace && rec.inputs.contains(f.input)) r = &rec;
          --f.input_count;
          if (r) {
            f.output = r->outputs.begin()->first;
            f.output_count += r->outputs.begin()->second;
          }
          if (f.input_count == 0) f.input.clear();
        }
      }
    } else {
      f.cook_progress = 0;
    }
  }
  if (hazardous(agent_)) {
    health_ = std::max(0.0, health_ - kLavaDamage);
    last_damage_tick_ = tick_;
  } else if (tick_ - last_damage_tick_ >= 40 && tick_ % 40 == 0 && health_ < 20.0 && hunger_ > 0) {
    health_ = std::min(20.0, health_ + 1.0);
  }
  if (tick_ % 1200 == 0) hunger_ = std::max(0.0, hunger_ - 1.0);
  if (health_ <= 0.0) terminate("health depleted");

  const double p[3] = {double(agent_.x), double(agent_.y), double(agent_.z)};
  for (int i = 0; i < 3; ++i) {
    sum_[i] += p[i];
    sum_sq_[i] += p[i] * p[i];
  }
  ++window_n_;
}

StepResult World::step(std::string_view action_text) {
  auto a = parse_action(action_text);
  if (!a) {
    if (!terminated_) tick_world();
    mining_cell_.reset();
    return {StepStatus::rejected_malformed, terminated_, "unknown action '" + std::string(action_text) + "'"};
  }
  return step(*a);
}

StepResult World::step(const Action& a) {
  if (terminated_) return {StepStatus::precondition_failed, true, "terminated: " + terminate_reason_};
  if (a.type != ActionType::mine) {
    mining_cell_.reset();
    mining_ticks_ = 0;
  }
  StepResult r = do_step(a);
  tick_world();
  r.terminated = terminated_;
  return r;
}

StepResult World::do_step(const Action& a) {
  auto malformed = [](std::string m) { return StepResult{StepStatus::rejected_malformed, false, std::move(m)}; };
  auto fail = [](std::string m) { return StepResult{StepStatus::precondition_failed, false, std::move(m)}; };
  const bool gui_open = gui_ != GuiKind::closed;

  switch (a.type) {
    case ActionType::noop: return {};
    case ActionType::move: {
      auto f = parse_facing(a.arg);
      if (!f && a.arg != "forward") return malformed("move needs a direction");
      if (gui_open) return fail("gui open");
      if (f) facing_ = *f;
      const Cell next = agent_ + facing_offset(facing_);
      if (!in_bounds(next) || is_solid(block(next))) return fail("blocked");
      agent_ = next;
      apply_gravity();
      return {};
    }
    case ActionType::turn: {
      if (auto f = parse_facing(a.arg)) facing_ = *f;
      else if (a.arg == "left") facing_ = static_cast<Facing>((static_cast<int>(facing_) + 3) % 4);
      else if (a.arg == "right") facing_ = static_cast<Facing>((static_cast<int>(facing_) + 1) % 4);
      else return malformed("turn needs left/right/direction");
      return {};
    }
    case ActionType::pitch: {
      if (a.arg == "up") pitch_ = Pitch::up;
      else if (a.arg == "level") pitch_ = Pitch::level;
      else if (a.arg == "down") pitch_ = Pitch::down;
      else return malformed("pitch needs up/level/down");
      return {};
    }
    case ActionType::jump: {
      if (gui_open) return fail("gui open");
      const Cell up = agent_ + Cell{0, 1, 0};
      const Cell target = up + facing_offset(facing_);
      if (!in_bounds(target) || is_solid(block(up)) || is_solid(block(target))) return fail("cannot step up");
      agent_ = target;
      apply_gravity();
      return {};
    }
    case ActionType::mine: {
      if (gui_open) return fail("gui open");
      const Cell c = faced_cell();
      const Block b = block(c);
      const MiningRule rule = recipes_->mining_rule(b);
      if (!rule.breakable || b == Block::air) {
        mining_cell_.reset();
        return fail("nothing breakable");
      }
      if (mining_cell_ != c) {
        mining_cell_ = c;
        mining_ticks_ = 0;
      }
      const Tier tier = tool_tier(selected_);
      if (++mining_ticks_ < recipes_->break_ticks(b, tier)) return {};
      set_block(c, Block::air);
      mining_cell_.reset();
      mining_ticks_ = 0;
      if (tier >= rule.min_tier && rule.drop) give(*rule.drop, 1);
      apply_gravity();
      return {};
    }
    case ActionType::place: {
      if (gui_open) return fail("gui open");
      const std::string item = a.arg.empty() ? selected_ : a.arg;
      if (!is_item(item)) return malformed("unknown item '" + item + "'");
      auto pb = placed_block(item);
      if (!pb) return fail("not placeable");
      const Cell c = faced_cell();
      if (!in_bounds(c) || block(c) != Block::air || c == agent_) return fail("target occupied");
      if (!take(item, 1)) return fail("not in inventory");
      set_block(c, *pb);
      return {};
    }
    case ActionType::open_gui:
    case ActionType::use: {
      if (gui_open) return fail("gui already open");
      const Cell c = faced_cell();
      const Block b = block(c);
      if (b == Block::crafting_table) gui_ = GuiKind::table;
      else if (b == Block::furnace) {
        gui_ = GuiKind::furnace;
        focused_furnace_ = c;
      } else if (a.type == ActionType::use) return fail("nothing to use");
      else gui_ = GuiKind::inventory;
      ++window_gui_.open_count;
      return {};
    }
    case ActionType::close_gui: {
      if (!gui_open) return fail("no gui open");
      gui_ = GuiKind::closed;
      ++window_gui_.close_count;
      return {};
    }
    case ActionType::craft: {
      const Recipe* r = recipes_->find(a.arg);
      if (!r) return malformed("unknown recipe '" + a.arg + "'");
      if (r->station == Station::furnace) return fail("furnace recipes are smelted");
      if (!gui_open || gui_ == GuiKind::furnace) return fail("no crafting gui open");
      if (r->station == Station::table && gui_ != GuiKind::table) return fail("recipe needs a crafting table");
      for (const auto& [item, n] : r->inputs)
        if (count(item) < n) return fail("missing " + item);
      for (const auto& [item, n] : r->inputs) take(item, n);
      for (const auto& [item, n] : r->outputs) {
        give(item, n);
        window_crafted_.push_back(item);
      }
      return {};
    }
    case ActionType::smelt_load: {
      if (!is_item(a.arg)) return malformed("unknown item '" + a.arg + "'");
      if (gui_ != GuiKind::furnace || !focused_furnace_) return fail("no furnace gui open");
      auto& f = furnaces_.at(*focused_furnace_);
      bool is_fuel = false, is_input = false;
      for (const auto& rec : recipes_->recipes()) {
        if (rec.station != Station::furnace) continue;
        if (rec.fuel == a.arg) is_fuel = true;
        if (rec.inputs.contains(a.arg)) is_input = true;
      }
      if (!is_fuel && !is_input) return fail("not smeltable");
      if (is_input && !f.input.empty() && f.input != a.arg) return fail("input slot holds another item");
      if (!take(a.arg, 1)) return fail("not in inventory");
      if (is_input) {
        f.input = a.arg;
        ++f.input_count;
      } else {
        ++f.fuel_count;
      }
      return {};
    }
    case ActionType::smelt_collect: {
      if (gui_ != GuiKind::furnace || !focused_furnace_) return fail("no furnace gui open");
      auto& f = furnaces_.at(*focused_furnace_);
      if (f.output_count == 0) return fail("nothing to collect");
      give(f.output, f.output_count);
      for (int i = 0; i < f.output_count; ++i) window_crafted_.push_back(f.output);
      f.output_count = 0;
      f.output.clear();
      return {};
    }
    case ActionType::select: {
      if (a.arg.empty()) return malformed("select needs a slot or item");
      if (std::all_of(a.arg.begin(), a.arg.end(), ::isdigit)) {
        const auto slot = static_cast<std::size_t>(std::stoi(a.arg));
        if (slot > 8) return malformed("slot out of range");
        if (slot >= hotbar_.size()) return fail("empty slot");
        selected_ = hotbar_[slot];
        return {};
      }
      if (!is_item(a.arg)) return malformed("unknown item '" + a.arg + "'");
      if (count(a.arg) == 0) return fail("not in inventory");
      selected_ = a.arg;
      return {};
    }
  }
  return malformed("unhandled action");
}

void World::mark_attempt() {
  mark_coords_ = agent_;
  mark_inventory_ = inventory_;
  window_gui_ = {};
  window_crafted_.clear();
  sum_ = {double(agent_.x), double(agent_.y), double(agent_.z)};
  sum_sq_ = {sum_[0] * sum_[0], sum_[1] * sum_[1], sum_[2] * sum_[2]};
  window_n_ = 1;
}

StateSnapshot World::snapshot() const {
  StateSnapshot s;
  s.episode_id = episode_id_;
  s.coords_start = mark_coords_.vec();
  s.coords = agent_.vec();
  double var = 0;
  for (int i = 0; i < 3; ++i) {
    const double m = sum_[i] / window_n_;
    var += std::max(0.0, sum_sq_[i] / window_n_ - m * m);
  }
  s.coords_variance = var / 3.0;
  s.inventory = inventory_;
  for (const auto& [item, n] : inventory_) {
    auto it = mark_inventory_.find(item);
    const int d = n - (it == mark_inventory_.end() ? 0 : it->second);
    if (d != 0) s.inv_delta[item] = d;
  }
  for (const auto& [item, n] : mark_inventory_)
    if (!inventory_.contains(item)) s.inv_delta[item] = -n;
  s.gui_open = gui_ != GuiKind::closed;
  s.gui_state = s.gui_open ? GuiState::open : GuiState::closed;
  s.gui_events = window_gui_;
  s.world_time = world_time();
  if (focused_furnace_) {
    auto it = furnaces_.find(*focused_furnace_);
    if (it != furnaces_.end()) {
      const auto& f = it->second;
      s.furnace_burn = static_cast<double>(f.burn_remaining) / RecipeGraph::kFuelBurnTicks;
      s.furnace_cook = f.output_count + static_cast<double>(f.cook_progress) / RecipeGraph::kCookTicks;
      if (gui_ == GuiKind::furnace) s.container_items = f.input_count + f.fuel_count + f.output_count;
    }
  }
  s.crafted_items = window_crafted_;
  s.selected_item = selected_;
  s.health = health_;
  s.hunger = hunger_;
  return s;
}

TraceStep World::trace_step() const {
  return TraceStep{agent_.vec(), inventory_, gui_ != GuiKind::closed, world_time(), health_};
}

std::string World::dump() const {
  std::ostringstream out;
  out << "seed " << seed_ << " tick " << tick_ << " time " << world_time() << "\n";
  out << "agent " << agent_.x << ' ' << agent_.y << ' ' << agent_.z << " facing " << facing_name(facing_) << " pitch "
      << static_cast<int>(pitch_) << " health " << health_ << " hunger " << hunger_ << " gui "
      << static_cast<int>(gui_) << " selected " << (selected_.empty() ? "-" : selected_) << " terminated "
      << terminated_ << "\n";
  out << "inventory";
  for (const auto& [k, v] : inventory_) out << ' ' << k << '=' << v;
  out << "\nhotbar";
  for (const auto& h : hotbar_) out << ' ' << h;
  out << "\n";
  for (const auto& [pos, f] : furnaces_)
    out << "furnace " << pos.x << ' ' << pos.y << ' ' << pos.z << ' ' << (f.input.empty() ? "-" : f.input) << ' '
        << f.input_count << ' ' << f.fuel_count << ' ' << f.burn_remaining << ' ' << f.cook_progress << ' '
        << (f.output.empty() ? "-" : f.output) << ' ' << f.output_count << "\n";
  static const char glyph[] = ".dgsLi~wTFB";
  for (int y = 0; y < cfg_.size_y; ++y) {
    out << "y" << y << "\n";
    for (int z = 0; z < cfg_.size_z; ++z) {
      for (int x = 0; x < cfg_.size_x; ++x) out << glyph[static_cast<int>(block({x, y, z}))];
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace evo::sim
