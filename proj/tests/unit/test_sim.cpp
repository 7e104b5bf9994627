#include <doctest.h>

#include <random>

#include "evo/error.hpp"
#include "evo/sim/world.hpp"

using namespace evo;
using namespace evo::sim;

namespace {

// Puts a block directly north of spawn at feet level and faces it.
World world_with(const std::vector<std::string>& cmds) {
  World w;
  w.reset(7, cmds);
  return w;
}

int mine_until_gone(World& w) {
  const Cell c = w.faced_cell();
  int n = 0;
  while (w.block(c) != Block::air && n < 500) {
    w.step("mine");
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("reset is deterministic per seed") {
  World a, b;
  const auto sa = a.reset(7, {});
  const auto sb = b.reset(7, {});
  CHECK(sa == sb);
  CHECK(a.dump() == b.dump());
  World c;
  c.reset(8, {});
  CHECK(c.dump() != a.dump());
}

TEST_CASE("reset starts at spawn with empty inventory") {
  World w;
  const auto s = w.reset(3, {});
  CHECK(s.inventory.empty());
  CHECK(s.coords == Vec3{16, 4, 16});
  CHECK(s.health == 20.0);
  CHECK_NOTHROW(check_invariants(s));
}

TEST_CASE("init commands") {
  World w;
  w.reset(7, {"setblock 10 4 10 crafting_table"});
  CHECK(w.block({10, 4, 10}) == Block::crafting_table);

  w.reset(7, {"/give @p minecraft:oak_log 5", "time set 6000", "fill 1 4 1 2 4 2 stone"});
  CHECK(w.count("oak_log") == 5);
  CHECK(w.world_time() == 6000);
  CHECK(w.block({2, 4, 2}) == Block::stone);

  w.reset(7, {"setblock ~ ~ ~-1 stone"});
  CHECK(w.block({16, 4, 15}) == Block::stone);

  CHECK_THROWS_AS(w.reset(7, {"setblock 10 4 10 diamond_block"}), ResetError);
  CHECK_THROWS_AS(w.reset(7, {"summon zombie"}), ResetError);
  try {
    w.reset(7, {"give @p stick", "give @p unobtainium"});
    FAIL("expected ResetError");
  } catch (const ResetError& e) {
    CHECK(e.command() == "give @p unobtainium");
  }
}

TEST_CASE("tick counting and world time") {
  World w;
  w.reset(1, {});
  for (int i = 0; i < 37; ++i) w.step(Action::noop());
  CHECK(w.tick() == 37);
  CHECK(w.snapshot().world_time == 37);
  w.step("bogus verb");
  CHECK(w.tick() == 38);
}

TEST_CASE("stone break duration depends on tier") {
  struct Row {
    const char* give;
    int ticks;
    bool drop;
  };
  for (Row r : {Row{nullptr, 60, false}, Row{"wooden_pickaxe", 30, true}, Row{"stone_pickaxe", 15, true},
                Row{"iron_pickaxe", 10, true}}) {
    std::vector<std::string> cmds{"setblock 16 4 15 stone"};
    if (r.give) cmds.push_back(std::string("give @p ") + r.give);
    World w = world_with(cmds);
    if (r.give) REQUIRE(w.step(std::string("select ") + r.give).status == StepStatus::ok);
    CHECK(mine_until_gone(w) == r.ticks);
    CHECK((w.count("cobblestone") == 1) == r.drop);
  }
}

TEST_CASE("mining progress resets when interrupted") {
  World w = world_with({"setblock 16 4 15 stone", "give @p wooden_pickaxe"});
  w.step("select wooden_pickaxe");
  for (int i = 0; i < 20; ++i) w.step("mine");
  w.step(Action::noop());
  CHECK(mine_until_gone(w) == 30);
}

TEST_CASE("wooden pickaxe needs a crafting table") {
  World w = world_with({"give @p plank 3", "give @p stick 2"});
  REQUIRE(w.step("open_gui").status == StepStatus::ok);
  CHECK(w.gui() == GuiKind::inventory);
  CHECK(w.step("craft wooden_pickaxe").status == StepStatus::precondition_failed);
  CHECK(w.count("wooden_pickaxe") == 0);
  w.step("close_gui");

  w.reset(7, {"give @p plank 3", "give @p stick 2", "setblock 16 4 15 crafting_table"});
  REQUIRE(w.step("open_gui").status == StepStatus::ok);
  CHECK(w.gui() == GuiKind::table);
  CHECK(w.step("craft wooden_pickaxe").status == StepStatus::ok);
  CHECK(w.count("wooden_pickaxe") == 1);
  CHECK(w.count("plank") == 0);
}

TEST_CASE("crafted items window") {
  World w = world_with({"give @p plank 2"});
  w.step("open_gui");
  REQUIRE(w.step("craft stick").status == StepStatus::ok);
  const auto s = w.snapshot();
  CHECK(s.crafted_items == std::vector<std::string>{"stick"});
  CHECK(s.inv_delta.at("stick") == 4);
  CHECK(s.inv_delta.at("plank") == -2);
  CHECK(s.gui_events.open_count == 1);
  w.mark_attempt();
  CHECK(w.snapshot().crafted_items.empty());
  CHECK(w.snapshot().inv_delta.empty());
}

TEST_CASE("malformed actions are rejected") {
  World w;
  w.reset(1, {});
  CHECK(w.step("dance").status == StepStatus::rejected_malformed);
  CHECK(w.step("craft unobtainium").status == StepStatus::rejected_malformed);
  CHECK(w.step("move up").status == StepStatus::rejected_malformed);
  CHECK(w.step("close_gui").status == StepStatus::precondition_failed);
}

TEST_CASE("lava damages and eventually terminates") {
  World w = world_with({"setblock 16 3 15 lava"});
  const double h0 = w.health();
  w.step(Action::noop());
  CHECK(w.health() < h0);
  int ticks = 1;
  while (!w.terminated() && ticks < 20) {
    w.step(Action::noop());
    ++ticks;
  }
  CHECK(w.terminated());
  CHECK(ticks == static_cast<int>(20.0 / kLavaDamage));
  CHECK(w.step(Action::noop()).terminated);
}

TEST_CASE("health regenerates away from hazards") {
  World w = world_with({"setblock 16 3 15 lava"});
  for (int i = 0; i < 3; ++i) w.step(Action::noop());
  w.set_block({16, 3, 15}, Block::grass);
  const double h = w.health();
  for (int i = 0; i < 200; ++i) w.step(Action::noop());
  CHECK(w.health() > h);
  CHECK(w.health() <= 20.0);
}

TEST_CASE("furnace smelts with fuel") {
  World w = world_with({"setblock 16 4 15 furnace", "give @p iron_ore 2", "give @p plank 2"});
  REQUIRE(w.step("open_gui").status == StepStatus::ok);
  CHECK(w.gui() == GuiKind::furnace);
  REQUIRE(w.step("smelt_load iron_ore").status == StepStatus::ok);
  REQUIRE(w.step("smelt_load iron_ore").status == StepStatus::ok);
  CHECK(w.snapshot().container_items == 2);
  CHECK(w.snapshot().furnace_burn == 0.0);
  REQUIRE(w.step("smelt_load plank").status == StepStatus::ok);
  CHECK(w.snapshot().furnace_burn > 0.0);
  for (int i = 0; i < 19; ++i) w.step(Action::noop());
  CHECK(w.snapshot().furnace_cook == doctest::Approx(1.0));
  for (int i = 0; i < 30; ++i) w.step(Action::noop());
  CHECK(w.snapshot().furnace_cook == doctest::Approx(1.0));
  CHECK(w.snapshot().furnace_burn == 0.0);
  REQUIRE(w.step("smelt_load plank").status == StepStatus::ok);
  for (int i = 0; i < 25; ++i) w.step(Action::noop());
  CHECK(w.snapshot().furnace_cook == doctest::Approx(2.0));
  REQUIRE(w.step("smelt_collect").status == StepStatus::ok);
  CHECK(w.count("iron_ingot") == 2);
  const auto crafted = w.snapshot().crafted_items;
  CHECK(std::count(crafted.begin(), crafted.end(), "iron_ingot") == 2);
}

TEST_CASE("place and select") {
  World w = world_with({"give @p crafting_table", "give @p oak_log 3"});
  CHECK(w.hotbar() == std::vector<std::string>{"crafting_table", "oak_log"});
  REQUIRE(w.step("select 0").status == StepStatus::ok);
  CHECK(w.selected_item() == "crafting_table");
  REQUIRE(w.step("place").status == StepStatus::ok);
  CHECK(w.block({16, 4, 15}) == Block::crafting_table);
  CHECK(w.count("crafting_table") == 0);
  CHECK(w.selected_item().empty());
  CHECK(w.hotbar() == std::vector<std::string>{"oak_log"});
  CHECK(w.step("select 3").status == StepStatus::precondition_failed);
  CHECK(w.step("place oak_log").status == StepStatus::precondition_failed);
}

TEST_CASE("movement and step up") {
  World w = world_with({"fill 15 4 14 17 5 14 air", "setblock 16 4 14 stone", "fill 15 3 13 17 3 15 grass"});
  REQUIRE(w.step("move north").status == StepStatus::ok);
  CHECK(w.agent() == Cell{16, 4, 15});
  CHECK(w.step("move north").status == StepStatus::precondition_failed);
  REQUIRE(w.step("jump").status == StepStatus::ok);
  CHECK(w.agent() == Cell{16, 5, 14});
  REQUIRE(w.step("move north").status == StepStatus::ok);
  CHECK(w.agent() == Cell{16, 4, 13});
  const auto s = w.snapshot();
  CHECK(s.coords_variance > 0.0);
}

TEST_CASE("tool gating holds under random play") {
  std::mt19937_64 rng(11);
  const char* acts[] = {"move north", "move south", "move east", "move west", "jump", "mine", "mine", "mine",
                        "pitch up", "pitch down", "pitch level", "open_gui", "close_gui", "craft plank",
                        "craft stick", "craft crafting_table", "craft wooden_pickaxe", "select 0", "place"};
  for (int ep = 0; ep < 20; ++ep) {
    World w;
    w.reset(ep, {"setblock 16 4 14 iron_ore", "setblock 16 4 18 stone"});
    for (int t = 0; t < 600 && !w.terminated(); ++t) {
      w.step(acts[rng() % std::size(acts)]);
      const auto s = w.snapshot();
      REQUIRE_NOTHROW(check_invariants(s));
      if (w.count("stone_pickaxe") == 0) CHECK(w.count("iron_ore") == 0);
      for (const auto& [item, n] : w.inventory()) CHECK(n > 0);
    }
  }
}

TEST_CASE("generated worlds have resources reachable from spawn") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    World w;
    w.reset(seed, {});
    int logs = 0, stone = 0, iron = 0;
    for (int z = 0; z < 32; ++z)
      for (int x = 0; x < 32; ++x) {
        const Block b = w.block({x, 4, z});
        logs += b == Block::oak_log;
        stone += b == Block::stone;
        iron += b == Block::iron_ore;
      }
    CHECK(logs >= 8);
    CHECK(stone >= 8);
    CHECK(iron >= 1);
    CHECK(w.standable(w.agent()));
  }
}
