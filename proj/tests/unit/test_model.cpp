#include <doctest.h>

#include "evo/error.hpp"
#include "evo/model/plan.hpp"

using namespace evo;

namespace {

StateSnapshot snap(Inventory inv, std::int64_t t = 0) {
  StateSnapshot s;
  s.episode_id = "ep";
  s.inventory = std::move(inv);
  s.world_time = t;
  return s;
}

const char* kCardPlan = R"({
  "plan_id": "p_xxxx",
  "subgoals": [
    {
      "subgoal_id": "sg_001",
      "condition": "mine oak log",
      "timeout_s": 60,
      "task_kind": "mine",
      "executor_hint": "stevei",
      "mode": "move",
      "checks": [{"type":"inv_ge","item":"oak_log","n":1}]
    }
  ],
  "global_constraints": []
})";

}  // namespace

TEST_CASE("state diff of a single addition") {
  auto d = compute_state_diff(snap({}), snap({{"oak_log", 1}}, 5));
  CHECK(d.inventory == InvDelta{{"oak_log", 1}});
  CHECK(d.world_time_delta == 5);
}

TEST_CASE("state diff identity is empty") {
  auto s = snap({{"plank", 3}});
  s.coords = {1, 2, 3};
  auto d = compute_state_diff(s, s);
  CHECK(d.empty());
  CHECK(d.displacement == Vec3{});
}

TEST_CASE("state diff of the wooden pickaxe recipe") {
  // 3 planks + 2 sticks -> 1 pickaxe
  auto d = compute_state_diff(snap({{"plank", 4}, {"stick", 2}}),
                              snap({{"plank", 1}, {"stick", 0}, {"wooden_pickaxe", 1}}));
  CHECK(d.inventory == InvDelta{{"plank", -3}, {"stick", -2}, {"wooden_pickaxe", 1}});
}

TEST_CASE("state diff is anti-symmetric and rejects mixed episodes") {
  auto a = snap({{"plank", 4}, {"dirt", 1}});
  auto b = snap({{"plank", 1}, {"stick", 4}});
  auto ab = compute_state_diff(a, b).inventory;
  auto ba = compute_state_diff(b, a).inventory;
  CHECK(ab.size() == ba.size());
  for (auto& [k, v] : ab) CHECK(ba.at(k) == -v);
  b.episode_id = "other";
  CHECK_THROWS_AS(compute_state_diff(a, b), ContractViolation);
}

TEST_CASE("card plan validates and round-trips") {
  auto plan = validate_plan_text(kCardPlan);
  REQUIRE(plan.subgoals.size() == 1);
  CHECK(plan.subgoals[0].executor_hint == ExecutorHint::default_);
  CHECK(plan.subgoals[0].checks[0].item == "oak_log");
  auto again = validate_plan(serialize_plan(plan));
  CHECK(again == plan);
  CHECK(canonical(serialize_plan(again)) == canonical(serialize_plan(plan)));
}

TEST_CASE("plan rejections name the field") {
  auto base = json::parse(kCardPlan);

  auto empty = base;
  empty["subgoals"] = json::array();
  CHECK_THROWS_AS(validate_plan(empty), SchemaError);

  auto missing = base;
  missing.erase("subgoals");
  CHECK_THROWS_AS(validate_plan(missing), SchemaError);

  auto zero = base;
  zero["subgoals"][0]["timeout_s"] = 0;
  try {
    validate_plan(zero);
    FAIL("expected rejection");
  } catch (const SchemaError& e) {
    CHECK(e.field() == "plan.subgoals[0].timeout_s");
  }

  auto dup = base;
  dup["subgoals"].push_back(dup["subgoals"][0]);
  CHECK_THROWS_AS(validate_plan(dup), SchemaError);

  auto no_item = base;
  no_item["subgoals"][0]["checks"][0].erase("item");
  try {
    validate_plan(no_item);
    FAIL("expected rejection");
  } catch (const SchemaError& e) {
    CHECK(e.field() == "plan.subgoals[0].checks[0].item");
  }

  auto long_cond = base;
  long_cond["subgoals"][0]["condition"] = "go and mine seven oak logs now";
  CHECK_THROWS_AS(validate_plan(long_cond), SchemaError);

  auto bad_kind = base;
  bad_kind["subgoals"][0]["task_kind"] = "dance";
  CHECK_THROWS_AS(validate_plan(bad_kind), SchemaError);

  auto bad_item = base;
  bad_item["subgoals"][0]["checks"][0]["item"] = "diamond_sword";
  CHECK_THROWS_AS(validate_plan(bad_item), SchemaError);

  auto near = base;
  near["subgoals"][0]["checks"][0] = {{"type", "coord_near"}, {"target", {1, 2, 3}}, {"radius", 0}};
  CHECK_THROWS_AS(validate_plan(near), SchemaError);
}

TEST_CASE("snapshot json round-trip") {
  auto s = snap({{"plank", 3}}, 7);
  s.coords = {1.5, 4, -2};
  s.crafted_items = {"plank"};
  s.gui_open = true;
  s.gui_state = GuiState::open;
  s.gui_events = {2, 1};
  json j = s;
  CHECK(j.get<StateSnapshot>() == s);
}
