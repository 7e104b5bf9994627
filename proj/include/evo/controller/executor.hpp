#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evo/model/types.hpp"
#include "evo/sim/world.hpp"

namespace evo {

// Plan-wide restrictions the executors honor.
struct ExecConstraints {
  bool avoid_hazard = false;
  std::set<std::uint64_t> avoid_cells;  // spatial hashes of target blocks to skip
  double cell_size = 16.0;

  static ExecConstraints from_plan(const std::vector<std::string>& global_constraints, double cell_size = 16.0);
};

struct Decision {
  enum class Kind { act, done, missing } kind = Kind::act;
  sim::Action action;
  std::vector<std::string> missing;
  std::string raw;  // when set, sent as text instead of `action`

  static Decision act(sim::Action a) { return {Kind::act, std::move(a), {}, {}}; }
  static Decision act(sim::ActionType t, std::string arg = {}) { return act(sim::Action{t, std::move(arg)}); }
  static Decision lacking(std::vector<std::string> m) { return {Kind::missing, sim::Action::noop(), std::move(m), {}}; }
  static Decision finished() { return {Kind::done, sim::Action::noop(), {}, {}}; }
};

// Stateful per-attempt policy choosing one primitive action per step.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual Decision next(const sim::World& w) = 0;
  virtual std::string name() const = 0;
};

// Routes by executor hint, checks and the produced item.
std::unique_ptr<Executor> make_executor(const SubgoalSpec& sg, const ExecConstraints& c);

// Replays a fixed action list, optionally cycling; a finished list ends the
// attempt. Used by fixtures and replays.
std::unique_ptr<Executor> make_script_executor(std::vector<std::string> actions, bool cycle);

namespace nav {

// Cells the agent can reach from `from` with move/jump/fall transitions;
// landing in lava or water is never allowed. Plain shortest paths unless
// hazardous cells are excluded.
struct Reach {
  std::vector<int> dist;  // -1 unreachable
  std::vector<int> parent;
  int sx, sy, sz;
  int index(const sim::Cell& c) const { return (c.y * sz + c.z) * sx + c.x; }
  sim::Cell cell(int i) const { return {i % sx, i / (sx * sz), (i / sx) % sz}; }
  int distance(const sim::Cell& c) const { return dist[static_cast<std::size_t>(index(c))]; }
};

Reach reach(const sim::World& w, bool avoid_hazard);

// First primitive action of the path to `goal`; nullopt when already there
// or unreachable.
std::optional<sim::Action> step_toward(const sim::World& w, const Reach& r, const sim::Cell& goal);

// Nearest reachable non-hazardous cell, for retreating.
std::optional<sim::Cell> nearest_safe(const sim::World& w, const Reach& r);

// Placed station blocks with at least one reachable standing cell.
std::set<std::string> reachable_stations(const sim::World& w);

}  // namespace nav

}  // namespace evo
