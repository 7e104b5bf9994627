#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include "evo/controller/executor.hpp"
#include "evo/planner/planner.hpp"
#include "evo/recall/encoder.hpp"

namespace evo {

using sim::Action;
using sim::ActionType;
using sim::Block;
using sim::Cell;
using sim::Facing;
using sim::GuiKind;
using sim::Pitch;
using sim::World;

ExecConstraints ExecConstraints::from_plan(const std::vector<std::string>& global_constraints, double cell_size) {
  ExecConstraints c;
  c.cell_size = cell_size;
  for (const auto& g : global_constraints) {
    if (g == kAvoidHazard) c.avoid_hazard = true;
    else if (auto cell = parse_avoid_cell(g)) c.avoid_cells.insert(*cell);
  }
  return c;
}

namespace nav {

namespace {

constexpr Facing kDirs[] = {Facing::north, Facing::east, Facing::south, Facing::west};

bool lands_badly(const World& w, const Cell& c) {
  const Block b = w.block(c);
  return b == Block::lava || b == Block::water;
}

Cell fall(const World& w, Cell c) {
  while (c.y > 1 && sim::is_passable(w.block(c + Cell{0, -1, 0}))) --c.y;
  return c;
}

// Landing cell of moving (or stepping up) from `c` toward `f`.
std::optional<std::pair<Cell, bool>> transition(const World& w, const Cell& c, Facing f) {
  const Cell next = c + sim::facing_offset(f);
  if (!w.in_bounds(next)) return std::nullopt;
  if (!sim::is_solid(w.block(next))) return std::pair{fall(w, next), false};
  const Cell up = c + Cell{0, 1, 0};
  const Cell target = up + sim::facing_offset(f);
  if (!w.in_bounds(up) || !w.in_bounds(target) || sim::is_solid(w.block(up)) || sim::is_solid(w.block(target)))
    return std::nullopt;
  return std::pair{fall(w, target), true};
}

}  // namespace

Reach reach(const World& w, bool avoid_hazard) {
  Reach r;
  r.sx = w.config().size_x;
  r.sy = w.config().size_y;
  r.sz = w.config().size_z;
  const std::size_t n = static_cast<std::size_t>(r.sx * r.sy * r.sz);
  r.dist.assign(n, -1);
  r.parent.assign(n, -1);
  using Item = std::pair<int, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const int start = r.index(w.agent());
  r.dist[static_cast<std::size_t>(start)] = 0;
  pq.push({0, start});
  while (!pq.empty()) {
    auto [d, i] = pq.top();
    pq.pop();
    if (d != r.dist[static_cast<std::size_t>(i)]) continue;
    const Cell c = r.cell(i);
    for (Facing f : kDirs) {
      auto t = transition(w, c, f);
      if (!t || lands_badly(w, t->first)) continue;
      const bool hazard = w.hazardous(t->first);
      if (hazard && avoid_hazard) continue;
      const int j = r.index(t->first);
      const int nd = d + 1;
      auto& dj = r.dist[static_cast<std::size_t>(j)];
      if (dj >= 0 && dj <= nd) continue;
      dj = nd;
      r.parent[static_cast<std::size_t>(j)] = i;
      pq.push({nd, j});
    }
  }
  return r;
}

std::optional<Action> step_toward(const World& w, const Reach& r, const Cell& goal) {
  if (!w.in_bounds(goal) || r.distance(goal) < 0 || goal == w.agent()) return std::nullopt;
  const int start = r.index(w.agent());
  int i = r.index(goal);
  while (r.parent[static_cast<std::size_t>(i)] != start) {
    i = r.parent[static_cast<std::size_t>(i)];
    if (i < 0) return std::nullopt;
  }
  const Cell first = r.cell(i);
  const Cell a = w.agent();
  for (Facing f : kDirs) {
    auto t = transition(w, a, f);
    if (!t || t->first != first) continue;
    if (!t->second) return Action{ActionType::move, std::string(sim::facing_name(f))};
    if (w.facing() != f) return Action{ActionType::turn, std::string(sim::facing_name(f))};
    return Action{ActionType::jump, {}};
  }
  return std::nullopt;
}

std::optional<Cell> nearest_safe(const World& w, const Reach& r) {
  std::optional<Cell> best;
  int best_d = 0;
  for (std::size_t i = 0; i < r.dist.size(); ++i) {
    const int d = r.dist[i];
    if (d < 0) continue;
    const Cell c = r.cell(static_cast<int>(i));
    if (w.hazardous(c)) continue;
    if (!best || d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

std::set<std::string> reachable_stations(const World& w) {
  std::set<std::string> out;
  const Reach r = reach(w, false);
  const auto& cfg = w.config();
  for (int y = 0; y < cfg.size_y; ++y)
    for (int z = 0; z < cfg.size_z; ++z)
      for (int x = 0; x < cfg.size_x; ++x) {
        const Block b = w.block({x, y, z});
        if (b != Block::crafting_table && b != Block::furnace) continue;
        const std::string name(sim::block_name(b));
        if (out.count(name)) continue;
        for (Facing f : kDirs)
          for (int dy = -1; dy <= 1; ++dy) {
            const Cell s = Cell{x, y - dy, z} + Cell{-sim::facing_offset(f).x, 0, -sim::facing_offset(f).z};
            if (w.in_bounds(s) && r.distance(s) >= 0) out.insert(name);
          }
      }
  return out;
}

}  // namespace nav

namespace {

constexpr Facing kDirs[] = {Facing::north, Facing::east, Facing::south, Facing::west};

Pitch pitch_for(int dy) { return dy > 0 ? Pitch::up : dy < 0 ? Pitch::down : Pitch::level; }

std::string_view pitch_name(Pitch p) { return p == Pitch::up ? "up" : p == Pitch::down ? "down" : "level"; }

// Reach recomputed only when the agent moves or a block changes.
class NavCache {
 public:
  explicit NavCache(bool avoid_hazard) : avoid_(avoid_hazard) {}
  const nav::Reach& get(const World& w) {
    if (!valid_ || w.agent() != at_ || w.revision() != rev_) {
      r_ = nav::reach(w, avoid_);
      at_ = w.agent();
      rev_ = w.revision();
      valid_ = true;
    }
    return r_;
  }

 private:
  bool avoid_;
  bool valid_ = false;
  Cell at_;
  std::uint64_t rev_ = 0;
  nav::Reach r_;
};

struct Approach {
  Cell stand;
  Facing facing;
  Pitch pitch;
  Cell target;
};

// Best standing pose to act on one of `targets`: lowest path cost, then
// target order, then direction.
std::optional<Approach> best_approach(const World& w, const nav::Reach& r, const std::vector<Cell>& targets) {
  std::optional<Approach> best;
  int best_d = 0;
  for (const Cell& b : targets)
    for (Facing f : kDirs)
      for (int dy = -1; dy <= 1; ++dy) {
        const Cell off = sim::facing_offset(f);
        const Cell s{b.x - off.x, b.y - dy, b.z - off.z};
        if (!w.in_bounds(s)) continue;
        const int d = r.distance(s);
        if (d < 0) continue;
        if (!best || d < best_d) {
          best = Approach{s, f, pitch_for(dy), b};
          best_d = d;
        }
      }
  return best;
}

// Next action to stand at `a` facing its target; nullopt once posed.
std::optional<Action> pose(const World& w, const nav::Reach& r, const Approach& a) {
  if (w.agent() != a.stand) {
    if (auto s = nav::step_toward(w, r, a.stand)) return s;
    return Action::noop();
  }
  if (w.facing() != a.facing) return Action{ActionType::turn, std::string(sim::facing_name(a.facing))};
  if (w.pitch() != a.pitch) return Action{ActionType::pitch, std::string(pitch_name(a.pitch))};
  return std::nullopt;
}

std::vector<Cell> blocks_of(const World& w, Block kind) {
  std::vector<Cell> out;
  const auto& cfg = w.config();
  for (int y = 0; y < cfg.size_y; ++y)
    for (int z = 0; z < cfg.size_z; ++z)
      for (int x = 0; x < cfg.size_x; ++x)
        if (w.block({x, y, z}) == kind) out.push_back({x, y, z});
  return out;
}

const CheckSpec* produced_check(const SubgoalSpec& sg) {
  for (const auto& c : sg.checks)
    if (c.kind == CheckKind::inv_ge && c.item) return &c;
  return nullptr;
}

class NoopExecutor : public Executor {
 public:
  Decision next(const World&) override { return Decision::act(Action::noop()); }
  std::string name() const override { return "noop"; }
};

class WaitExecutor : public Executor {
 public:
  Decision next(const World& w) override {
    if (w.gui() != GuiKind::closed) return Decision::act(ActionType::close_gui);
    return Decision::act(Action::noop());
  }
  std::string name() const override { return "wait"; }
};

class MineExecutor : public Executor {
 public:
  MineExecutor(std::string item, Block source, ExecConstraints c)
      : item_(std::move(item)), source_(source), c_(std::move(c)), nav_(c_.avoid_hazard) {}

  Decision next(const World& w) override {
    const sim::Tier need = w.recipes().mining_rule(source_).min_tier;
    if (need > sim::Tier::hand) {
      std::string best;
      for (const auto& [it, n] : w.inventory())
        if (n > 0 && sim::tool_tier(it) >= need && (best.empty() || sim::tool_tier(it) > sim::tool_tier(best)))
          best = it;
      if (best.empty()) return Decision::lacking({sim::pickaxe_for(need)});
      if (sim::tool_tier(w.selected_item()) < need) return Decision::act(ActionType::select, best);
    }
    if (w.gui() != GuiKind::closed) return Decision::act(ActionType::close_gui);
    const Cell faced = w.faced_cell();
    if (w.block(faced) == source_ && allowed(faced)) return Decision::act(ActionType::mine);

    const auto& r = nav_.get(w);
    std::vector<Cell> preferred, fallback;
    for (const Cell& b : blocks_of(w, source_)) (allowed(b) ? preferred : fallback).push_back(b);
    auto a = best_approach(w, r, preferred);
    if (!a) a = best_approach(w, r, fallback);
    if (!a) return Decision::act(Action::noop());
    if (auto act = pose(w, r, *a)) return Decision::act(*act);
    return Decision::act(ActionType::mine);
  }
  std::string name() const override { return "mine"; }

 private:
  bool allowed(const Cell& b) const { return !c_.avoid_cells.count(spatial_hash(b.vec(), c_.cell_size)); }

  std::string item_;
  Block source_;
  ExecConstraints c_;
  NavCache nav_;
};

// Shared station handling: walk to an existing station block or place one
// from the inventory, then open its GUI.
class StationUser {
 public:
  StationUser(Block station, bool avoid_hazard) : station_(station), nav_(avoid_hazard) {}

  // Action that moves toward having the station GUI open; lacking when the
  // station is neither in the world nor in the inventory.
  Decision approach(const World& w) {
    const GuiKind want = station_ == Block::furnace ? GuiKind::furnace : GuiKind::table;
    if (w.gui() != GuiKind::closed && w.gui() != want) return Decision::act(ActionType::close_gui);
    if (w.block(w.faced_cell()) == station_) return Decision::act(ActionType::open_gui);
    const auto& r = nav_.get(w);
    if (auto a = best_approach(w, r, blocks_of(w, station_))) {
      if (auto act = pose(w, r, *a)) return Decision::act(*act);
      return Decision::act(ActionType::open_gui);
    }
    const std::string item(sim::block_name(station_));
    if (w.count(item) == 0) return Decision::lacking({item});
    if (w.pitch() != Pitch::level) return Decision::act(ActionType::pitch, "level");
    const Cell front = w.faced_cell();
    if (w.in_bounds(front) && w.block(front) == Block::air) return Decision::act(ActionType::place, item);
    for (Facing f : kDirs) {
      const Cell c = w.agent() + sim::facing_offset(f);
      if (w.in_bounds(c) && w.block(c) == Block::air)
        return Decision::act(ActionType::turn, std::string(sim::facing_name(f)));
    }
    return Decision::act(Action::noop());
  }

 private:
  Block station_;
  NavCache nav_;
};

class CraftExecutor : public Executor {
 public:
  CraftExecutor(const sim::Recipe* r, const ExecConstraints& c) : r_(r), station_(Block::crafting_table, c.avoid_hazard) {}

  Decision next(const World& w) override {
    std::vector<std::string> missing;
    for (const auto& [in, n] : r_->inputs)
      if (w.count(in) < n) missing.push_back(in);
    if (!missing.empty()) return Decision::lacking(missing);
    if (r_->station == sim::Station::table) {
      if (w.gui() == GuiKind::table) return Decision::act(ActionType::craft, r_->id);
      return station_.approach(w);
    }
    if (w.gui() == GuiKind::inventory || w.gui() == GuiKind::table) return Decision::act(ActionType::craft, r_->id);
    if (w.gui() == GuiKind::furnace) return Decision::act(ActionType::close_gui);
    if (w.block(w.faced_cell()) == Block::furnace) return Decision::act(ActionType::turn, "right");
    return Decision::act(ActionType::open_gui);
  }
  std::string name() const override { return "craft"; }

 private:
  const sim::Recipe* r_;
  StationUser station_;
};

class SmeltExecutor : public Executor {
 public:
  SmeltExecutor(const sim::Recipe* r, std::int64_t target, const ExecConstraints& c)
      : r_(r), target_(target), station_(Block::furnace, c.avoid_hazard) {}

  Decision next(const World& w) override {
    const std::string& out = r_->outputs.begin()->first;
    const std::string& in = r_->inputs.begin()->first;
    const std::string fuel = r_->fuel.value_or("");
    if (w.gui() == GuiKind::furnace) {
      auto it = w.furnaces().find(w.faced_cell());
      if (it == w.furnaces().end()) return Decision::act(ActionType::close_gui);
      const sim::FurnaceState& f = it->second;
      if (f.output_count > 0) return Decision::act(ActionType::smelt_collect);
      const bool input_ok = f.input.empty() || f.input == in;
      if (input_ok && w.count(out) + f.input_count < target_) {
        if (w.count(in) > 0) return Decision::act(ActionType::smelt_load, in);
        if (f.input_count == 0) return Decision::lacking({in});
      }
      const int covered = f.fuel_count + (f.burn_remaining > 0 ? 1 : 0);
      if (!fuel.empty() && f.input_count > covered) {
        if (w.count(fuel) > 0) return Decision::act(ActionType::smelt_load, fuel);
        return Decision::lacking({fuel});
      }
      return Decision::act(Action::noop());
    }
    std::vector<std::string> missing;
    if (w.count(in) == 0) missing.push_back(in);
    if (!fuel.empty() && w.count(fuel) == 0) missing.push_back(fuel);
    // A furnace already holding work is worth visiting without materials.
    bool pending = false;
    for (const auto& [pos, f] : w.furnaces())
      if (f.output_count > 0 || (f.input == in && f.input_count > 0)) pending = true;
    if (!missing.empty() && !pending) return Decision::lacking(missing);
    return station_.approach(w);
  }
  std::string name() const override { return "smelt"; }

 private:
  const sim::Recipe* r_;
  std::int64_t target_;
  StationUser station_;
};

// Walks into the radius of a coord_near target. When no such cell is
// reachable it patrols between the closest reachable cell and a far one.
class GotoExecutor : public Executor {
 public:
  GotoExecutor(Vec3 target, double radius, const ExecConstraints& c)
      : target_(target), radius_(radius), nav_(c.avoid_hazard) {}

  Decision next(const World& w) override {
    if (w.gui() != GuiKind::closed) return Decision::act(ActionType::close_gui);
    const auto& r = nav_.get(w);
    std::optional<Cell> goal;
    int goal_d = 0;
    std::optional<Cell> closest;
    double closest_e = 0;
    for (std::size_t i = 0; i < r.dist.size(); ++i) {
      if (r.dist[i] < 0) continue;
      const Cell c = r.cell(static_cast<int>(i));
      const double e = dist(c);
      if (e <= radius_ && (!goal || r.dist[i] < goal_d)) {
        goal = c;
        goal_d = r.dist[i];
      }
      if (!closest || e < closest_e) {
        closest = c;
        closest_e = e;
      }
    }
    if (!goal) {
      if (!patrol_) {
        const Cell a = *closest;
        std::optional<Cell> far;
        int far_d = -1;
        for (std::size_t i = 0; i < r.dist.size(); ++i) {
          if (r.dist[i] < 0) continue;
          const Cell c = r.cell(static_cast<int>(i));
          const int m = std::abs(c.x - a.x) + std::abs(c.z - a.z);
          if (m > far_d) {
            far = c;
            far_d = m;
          }
        }
        patrol_ = std::pair{a, *far};
      }
      if (w.agent() == (toward_b_ ? patrol_->second : patrol_->first)) toward_b_ = !toward_b_;
      goal = toward_b_ ? patrol_->second : patrol_->first;
    }
    if (auto s = nav::step_toward(w, r, *goal)) return Decision::act(*s);
    return Decision::act(Action::noop());
  }
  std::string name() const override { return "goto"; }

 private:
  double dist(const Cell& c) const {
    const double dx = c.x - target_.x, dy = c.y - target_.y, dz = c.z - target_.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }

  Vec3 target_;
  double radius_;
  NavCache nav_;
  std::optional<std::pair<Cell, Cell>> patrol_;
  bool toward_b_ = false;
};

class ScriptExecutor : public Executor {
 public:
  ScriptExecutor(std::vector<std::string> actions, bool cycle) : actions_(std::move(actions)), cycle_(cycle) {}

  Decision next(const World&) override {
    if (actions_.empty() || (!cycle_ && i_ >= actions_.size())) return Decision::finished();
    const std::string& text = actions_[i_ % actions_.size()];
    ++i_;
    if (auto a = sim::parse_action(text)) return Decision::act(*a);
    // Unparseable text is passed through so the environment rejects it.
    Decision d = Decision::act(Action::noop());
    d.raw = text;
    return d;
  }
  std::string name() const override { return "script"; }

 private:
  std::vector<std::string> actions_;
  bool cycle_;
  std::size_t i_ = 0;
};

}  // namespace

std::unique_ptr<Executor> make_executor(const SubgoalSpec& sg, const ExecConstraints& c) {
  if (sg.executor_hint == ExecutorHint::wait || sg.task_kind == TaskKind::wait)
    return std::make_unique<WaitExecutor>();
  const CheckSpec* inv = produced_check(sg);
  if (!inv) {
    for (const auto& ch : sg.checks)
      if (ch.kind == CheckKind::coord_near && ch.target)
        return std::make_unique<GotoExecutor>(*ch.target, ch.radius.value_or(1.0), c);
    return std::make_unique<NoopExecutor>();
  }
  const auto& g = sim::RecipeGraph::standard();
  if (auto src = g.source_block(*inv->item)) return std::make_unique<MineExecutor>(*inv->item, *src, c);
  if (const sim::Recipe* r = g.producer(*inv->item)) {
    if (r->station == sim::Station::furnace) return std::make_unique<SmeltExecutor>(r, inv->n.value_or(1), c);
    return std::make_unique<CraftExecutor>(r, c);
  }
  return std::make_unique<NoopExecutor>();
}

std::unique_ptr<Executor> make_script_executor(std::vector<std::string> actions, bool cycle) {
  return std::make_unique<ScriptExecutor>(std::move(actions), cycle);
}

}  // namespace evo
