#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "evo/distill/templates.hpp"
#include "evo/error.hpp"
#include "evo/model/plan.hpp"
#include "evo/planner/planner.hpp"
#include "evo/recall/encoder.hpp"
#include "oracles/recipe_oracle.hpp"

using namespace evo;

namespace {

std::vector<std::string> produced(const PlanSpec& p) {
  std::vector<std::string> out;
  for (const auto& sg : p.subgoals) out.push_back(produced_item(sg).value_or("?"));
  return out;
}

StateSnapshot with_inventory(Inventory inv) {
  StateSnapshot s;
  s.inventory = std::move(inv);
  return s;
}

PlanSpec plan_for(const std::string& goal, const Inventory& inv = {}, const std::vector<Guardrail>& guards = {},
                  bool faulty = false, const std::vector<Skill>& skills = {}) {
  FaultConfig f;
  f.omit_stations = true;
  return scripted_plan(goal, with_inventory(inv), guards, skills, sim::RecipeGraph::standard(), f, faulty);
}

Guardrail table_guard() {
  Guardrail g;
  g.level = GuardLevel::task;
  g.trigger.goal_pattern = "craft *_pickaxe";
  g.trigger.lacking = {"crafting_table"};
  auto req = subgoal_for("crafting_table", 1);
  req.subgoal_id = "sg_req";
  g.require = {req};
  g.consequence = "deadlock";
  g.consequence_reason = FailureReason::tool_missing;
  KnowledgeBase kb;
  kb.commit(g, "tools");
  return kb.guardrails().front();
}

Guardrail subgoal_guard(const std::string& goal_item, FailureReason r, std::set<std::string> lacking = {},
                        std::optional<std::uint64_t> cell = std::nullopt) {
  const auto sg = subgoal_for(goal_item, 1);
  Guardrail g;
  g.level = GuardLevel::subgoal;
  g.trigger.task_kind = sg.task_kind;
  g.trigger.cond_sig = condition_hash(sg);
  g.trigger.reason = r;
  g.trigger.lacking = std::move(lacking);
  g.trigger.spatial_cell = cell;
  g.forbid = sg.condition;
  g.consequence_reason = r;
  g.consequence = "x";
  KnowledgeBase kb;
  kb.commit(g, "tools");
  return kb.guardrails().front();
}

}  // namespace

TEST_CASE("wooden pickaxe from nothing follows dependency order") {
  const auto p = plan_for("craft wooden_pickaxe");
  CHECK(produced(p) == std::vector<std::string>{"oak_log", "plank", "stick", "crafting_table", "wooden_pickaxe"});
  CHECK(oracle::topological(p));
  CHECK(oracle::dry_run(p, {}));
  CHECK(p.subgoals[0].checks[0].n == 3);  // 9 planks: 4 table + 3 pickaxe + 2 sticks
  CHECK(p.subgoals[1].checks[0].n == 9);
  CHECK_NOTHROW(validate_plan(serialize_plan(p)));
}

TEST_CASE("scripted plans are topological and executable for every tool chain") {
  const char* goals[] = {"mine 3 oak_log", "craft plank", "craft wooden_pickaxe", "mine cobblestone",
                         "craft stone_pickaxe", "craft furnace", "smelt iron_ingot", "craft iron_pickaxe"};
  const Inventory starts[] = {{},
                              {{"plank", 2}},
                              {{"wooden_pickaxe", 1}},
                              {{"crafting_table", 1}, {"stick", 5}},
                              {{"iron_pickaxe", 1}, {"iron_ingot", 1}},
                              {{"cobblestone", 20}}};
  for (const char* g : goals)
    for (const auto& inv : starts) {
      CAPTURE(g);
      const auto p = plan_for(g, inv);
      CHECK(oracle::topological(p, inv));
      CHECK(oracle::dry_run(p, inv));
      CHECK(p == plan_for(g, inv));
    }
}

TEST_CASE("omitting stations breaks the plan by design") {
  const auto p = plan_for("craft wooden_pickaxe", {}, {}, true);
  CHECK(produced(p) == std::vector<std::string>{"oak_log", "plank", "stick", "wooden_pickaxe"});
  CHECK_FALSE(oracle::dry_run(p, {}));
}

TEST_CASE("task guardrail restores the station even under the fault") {
  const auto p = plan_for("craft wooden_pickaxe", {}, {table_guard()}, true);
  const auto items = produced(p);
  const auto table = std::find(items.begin(), items.end(), "crafting_table");
  REQUIRE(table != items.end());
  CHECK(table < std::find(items.begin(), items.end(), "wooden_pickaxe"));
  CHECK(oracle::dry_run(p, {}));
  // Holding a table means the trigger no longer applies.
  const auto held = plan_for("craft wooden_pickaxe", {{"crafting_table", 1}}, {table_guard()}, true);
  const auto held_items = produced(held);
  CHECK(std::count(held_items.begin(), held_items.end(), "crafting_table") == 0);
}

TEST_CASE("subgoal guardrails rewrite the plan") {
  SUBCASE("missing tool is acquired first when the planner is sound") {
    auto g = subgoal_guard("wooden_pickaxe", FailureReason::tool_missing, {"crafting_table"});
    // A sound planner already includes the table; the faulty one keeps dropping stations.
    CHECK(oracle::dry_run(plan_for("craft wooden_pickaxe", {}, {g}), {}));
    CHECK_FALSE(oracle::dry_run(plan_for("craft wooden_pickaxe", {}, {g}, true), {}));
  }
  SUBCASE("hazard and spatial failures become global constraints") {
    auto risk = subgoal_guard("iron_ore", FailureReason::risk_abort);
    auto stuck = subgoal_guard("iron_ore", FailureReason::nav_stuck, {}, spatial_hash({20, 4, 16}));
    const auto p = plan_for("smelt iron_ingot", {{"stone_pickaxe", 1}}, {risk, stuck});
    REQUIRE(p.global_constraints.size() == 2);
    CHECK(parse_avoid_cell(p.global_constraints[0]) == spatial_hash({20, 4, 16}));
    CHECK(p.global_constraints[1] == kAvoidHazard);
  }
  SUBCASE("timeouts double") {
    auto t = subgoal_guard("oak_log", FailureReason::timeout);
    const auto base = plan_for("craft plank");
    const auto p = plan_for("craft plank", {}, {t});
    CHECK(p.subgoals[0].timeout_s == 2 * base.subgoals[0].timeout_s);
  }
  SUBCASE("forbidding the only route is a planning error") {
    auto g = subgoal_guard("plank", FailureReason::action_invalid);
    CHECK_THROWS_AS(plan_for("craft plank", {{"oak_log", 1}}, {g}), PlannerError);
  }
}

TEST_CASE("skills replace chaining when their preconditions hold") {
  Skill s;
  s.name = "craft_plank";
  s.goal = "craft plank";
  auto a = subgoal_for("oak_log", 2);
  auto b = subgoal_for("plank", 8);
  s.steps = {a, b};
  CheckSpec c;
  c.item = "plank";
  c.n = 8;
  s.success_checks = {c};
  const auto p = plan_for("craft plank", {}, {}, false, {s});
  CHECK(produced(p) == std::vector<std::string>{"oak_log", "plank"});
  CHECK(p.subgoals[1].checks[0].n == 8);
  s.preconditions = {CheckSpec{CheckKind::inv_ge, std::string("stick"), 1, std::nullopt, std::nullopt}};
  CHECK(plan_for("craft plank", {}, {}, false, {s}).subgoals[0].checks[0].n == 1);
}

TEST_CASE("stations placed by init commands are not re-crafted") {
  ScriptedPlanner planner;
  PlannerRequest req;
  req.goal = "craft wooden_pickaxe";
  req.init_commands = {"/setblock ~ ~ ~1 minecraft:crafting_table"};
  const auto p = planner.plan(req);
  const auto items = produced(p);
  CHECK(std::count(items.begin(), items.end(), "crafting_table") == 0);
  CHECK(oracle::dry_run(p, {}, {"crafting_table"}));
}

TEST_CASE("fault activation is a deterministic share of episodes") {
  FaultConfig f;
  f.omit_stations = true;
  f.rate = 0.5;
  int on = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) on += f.active("craft_wooden_pickaxe", s);
  CHECK(on > 400);
  CHECK(on < 600);
  CHECK(f.active("t", 3) == f.active("t", 3));
  f.rate = 0.0;
  CHECK_FALSE(f.active("t", 3));
}

TEST_CASE("unknown goals are planning errors") {
  CHECK_THROWS_AS(plan_for("craft unobtainium"), PlannerError);
  CHECK_THROWS_AS(plan_for("mine bedrock"), PlannerError);
}

TEST_CASE("planner prompt layout") {
  PlannerRequest req;
  req.goal = "craft wooden_pickaxe";
  const auto bare = render_planner_prompt(req);
  CHECK(bare.user.find("Task: craft wooden_pickaxe") == 0);
  CHECK(bare.user.find("Init state:") != std::string::npos);
  CHECK(bare.user.find("Memory capsule") == std::string::npos);
  CHECK(bare.user.find("Known skills") == std::string::npos);
  CHECK(bare.user.find("Known failures") == std::string::npos);
  CHECK(bare.system.find("\"global_constraints\"") != std::string::npos);
  CHECK(bare == render_planner_prompt(req));

  req.goal = "craft an iron pickaxe";
  req.init_commands = {"/setblock ~ ~ ~ minecraft:crafting_table"};
  req.state.inventory = {{"iron_ingot", 3}, {"stick", 2}};
  req.state.coords = {100, 64, 200};
  req.capsule.facts = {{"last_task", "craft_stone_tools", "d_000119"}};
  req.capsule.constraints = {{"avoid_nav_stuck_near_lava_pool", "true", "diagnosis"}};
  req.capsule.next_actions = {"place crafting table near player"};
  Skill s;
  s.name = "collect_wood";
  s.goal = "mine oak_log";
  s.steps = {subgoal_for("oak_log", 1)};
  req.skills = {s};
  auto g = subgoal_guard("iron_ore", FailureReason::nav_stuck);
  req.guardrails = {g};
  const auto doc = render_planner_prompt(req);
  const char* order[] = {"Task:", "Init commands", "Init state:", "Memory capsule:", "Known skills:",
                         "Known failures:"};
  std::size_t last = 0;
  for (const char* h : order) {
    const auto at = doc.user.find(h);
    REQUIRE(at != std::string::npos);
    CHECK(at >= last);
    last = at;
  }
  CHECK(doc.user.find(R"(inventory={"iron_ingot":3,"stick":2}, coords=[100,64,200], HP=20, hunger=20.)") !=
        std::string::npos);
  CHECK(doc.user.find("- /setblock ~ ~ ~ minecraft:crafting_table") != std::string::npos);
  CHECK(doc.user.find(render_guardrail(g)) != std::string::npos);
  CHECK(doc.user.find("- name: collect_wood") != std::string::npos);
}

TEST_CASE("replan prompt shows remaining goal and current state") {
  PlannerRequest req;
  req.goal = "craft wooden_pickaxe";
  req.mode = PlanMode::replan;
  CHECK_THROWS_AS(render_planner_prompt(req), ContractViolation);
  req.remaining_goal = "craft wooden_pickaxe";
  req.completed = {subgoal_for("oak_log", 3)};
  const auto doc = render_planner_prompt(req);
  CHECK(doc.user.find("Remaining goal: craft wooden_pickaxe") != std::string::npos);
  CHECK(doc.user.find("Current state:") != std::string::npos);
  CHECK(doc.user.find("Init state:") == std::string::npos);
}

TEST_CASE("templates can be overridden and are checksummed") {
  const auto& base = TemplateSet::embedded();
  for (const char* name : {"planner", "recall", "diagnosis", "skill_distill", "failure_distill"})
    CHECK(base.checksums().contains(name));
  CHECK(fill("a {{x}} b", {{"x", "1"}}) == "a 1 b");
  CHECK_THROWS_AS(fill("{{y}}", {}), ContractViolation);
  const auto card = parse_card("@@ one\nhello\n@@ two\nworld\n\n");
  CHECK(card.block("two") == "world");
  CHECK_THROWS_AS(card.block("three"), NotFound);
}

TEST_CASE("json extraction from chatty replies") {
  CHECK(extract_json_object("Sure! Here it is: {\"a\": {\"b\": \"}\"}} thanks") == R"({"a": {"b": "}"}})");
  CHECK(extract_json_object("no json here") == std::nullopt);
  CHECK(extract_json_object("{broken {\"ok\": 1}") == R"({"ok": 1})");
}

namespace {

struct MockChat {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::vector<std::string> replies;
  std::vector<json> requests;
  std::size_t next = 0;

  explicit MockChat(std::vector<std::string> r) : replies(std::move(r)) {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      requests.push_back(json::parse(req.body));
      const std::string content = replies[std::min(next++, replies.size() - 1)];
      json body = {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}};
      res.set_content(body.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockChat() {
    server.stop();
    thread.join();
  }
  EndpointConfig endpoint() const {
    EndpointConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    c.timeout_s = 5;
    return c;
  }
};

const char* kCardPlan = R"({"plan_id": "p_0001", "subgoals": [{"subgoal_id": "sg_001",
  "condition": "mine oak log", "timeout_s": 60, "task_kind": "mine", "executor_hint": "stevei",
  "mode": "move", "checks": [{"type": "inv_ge", "item": "oak_log", "n": 1}]}], "global_constraints": []})";

PlannerRequest simple_request() {
  PlannerRequest req;
  req.goal = "mine oak_log";
  return req;
}

}  // namespace

TEST_CASE("external planner accepts a schema-shaped reply") {
  MockChat mock({kCardPlan});
  ExternalPlanner planner(mock.endpoint());
  const auto p = planner.plan(simple_request());
  CHECK(p.plan_id == "p_0001");
  CHECK(p.subgoals.at(0).executor_hint == ExecutorHint::default_);
  REQUIRE(mock.requests.size() == 1);
  CHECK(mock.requests[0]["temperature"] == 0.0);
  CHECK(mock.requests[0]["messages"].size() == 2);
}

TEST_CASE("external planner extracts JSON after prose and repairs bad plans") {
  MockChat mock({"Plan below.\n" + std::string(kCardPlan)});
  ExternalPlanner planner(mock.endpoint());
  CHECK(planner.plan(simple_request()).subgoals.size() == 1);

  MockChat repair({R"({"plan_id": "p_1", "subgoals": []})", kCardPlan});
  ExternalPlanner p2(repair.endpoint());
  CHECK(p2.plan(simple_request()).plan_id == "p_0001");
  REQUIRE(repair.requests.size() == 2);
  const auto& msgs = repair.requests[1]["messages"];
  CHECK(msgs.size() == 4);
  CHECK(msgs[3]["content"].get<std::string>().find("rejected") != std::string::npos);
}

TEST_CASE("external planner gives up after the retry budget") {
  MockChat mock({"I cannot help with that."});
  ExternalPlanner planner(mock.endpoint());
  try {
    planner.plan(simple_request());
    FAIL("expected PlannerError");
  } catch (const PlannerError& e) {
    CHECK(e.last_reply() == "I cannot help with that.");
  }
  CHECK(mock.requests.size() == 3);
}

TEST_CASE("unreachable endpoint is a transport error") {
  int port;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  EndpointConfig c;
  c.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  c.timeout_s = 2;
  ExternalPlanner planner(c);
  CHECK_THROWS_AS(planner.plan(simple_request()), TransportError);
}
