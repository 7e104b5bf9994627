#include <doctest.h>

#include "evo/distill/knowledge.hpp"
#include "evo/distill/templates.hpp"
#include "evo/error.hpp"
#include "evo/model/plan.hpp"
#include "evo/recall/encoder.hpp"
#include "fixtures.hpp"
#include "oracles/recipe_oracle.hpp"

using namespace evo;

namespace {

ExperienceTuple step(const std::string& item, int n, Inventory pre, Inventory post, std::string id) {
  ExperienceTuple e;
  e.doc_id = std::move(id);
  e.episode_id = "ep";
  e.s_pre.episode_id = e.s_post.episode_id = "ep";
  e.s_pre.inventory = std::move(pre);
  e.s_post.inventory = std::move(post);
  e.action = subgoal_for(item, n);
  e.diagnosis = DiagnosisRecord::make(true, compute_state_diff(e.s_pre, e.s_post), std::nullopt, {});
  return e;
}

ExperienceTuple failure(FailureReason r, Vec3 at, const std::string& id) {
  auto e = fx::tuple("mine oak log", TaskKind::mine, "oak_log", false, r, at);
  e.doc_id = id;
  return e;
}

PlanSpec plan_of(const std::vector<std::string>& items) {
  PlanSpec p;
  p.plan_id = "p";
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto sg = subgoal_for(items[i], 1);
    sg.subgoal_id = "sg_" + std::to_string(i);
    p.subgoals.push_back(sg);
  }
  return p;
}

}  // namespace

TEST_CASE("skill from a log-plank-stick trajectory") {
  std::vector<ExperienceTuple> traj = {
      step("oak_log", 1, {}, {{"oak_log", 1}}, "d_000001"),
      step("plank", 4, {{"oak_log", 1}}, {{"plank", 4}}, "d_000002"),
      step("stick", 4, {{"plank", 4}}, {{"plank", 2}, {"stick", 4}}, "d_000003"),
  };
  auto s = distill_skill(traj, "craft stick");
  CHECK(s.steps.size() == 3);
  // 1 log mined and consumed; 4 planks made, 2 used for sticks.
  CHECK(s.effects == InvDelta{{"plank", 2}, {"stick", 4}});
  CHECK(s.preconditions.empty());
  CHECK(s.success_checks == traj.back().action.checks);
  CHECK(s.provenance.size() == 3);

  auto tail = distill_skill({traj[1], traj[2]}, "craft stick");
  REQUIRE(tail.preconditions.size() == 1);
  CHECK(tail.preconditions[0].item == "oak_log");
  CHECK(tail.preconditions[0].n == 1);

  auto one = distill_skill({traj[0]}, "mine oak_log");
  CHECK(one.steps.size() == 1);

  auto bad = traj;
  bad[1].diagnosis = DiagnosisRecord::make(false, bad[1].diagnosis.state_diff, FailureReason::timeout, {});
  CHECK_THROWS_AS(distill_skill(bad, "craft stick"), ContractViolation);
}

TEST_CASE("iron pickaxe skill keeps the final check") {
  std::vector<ExperienceTuple> traj = {
      step("oak_log", 4, {{"iron_ingot", 3}}, {{"iron_ingot", 3}, {"oak_log", 4}}, "d_000110"),
      step("stick", 4, {{"iron_ingot", 3}, {"oak_log", 4}}, {{"iron_ingot", 3}, {"oak_log", 3}, {"plank", 2}, {"stick", 4}}, "d_000115"),
      step("iron_pickaxe", 1, {{"iron_ingot", 3}, {"oak_log", 3}, {"plank", 2}, {"stick", 4}},
           {{"oak_log", 3}, {"plank", 2}, {"stick", 2}, {"iron_pickaxe", 1}}, "d_000120"),
  };
  auto s = distill_skill(traj, "craft iron_pickaxe");
  REQUIRE(s.success_checks.size() == 1);
  CHECK(render_check(s.success_checks[0]) == "inv_ge iron_pickaxe 1");
  REQUIRE(s.preconditions.size() == 1);
  CHECK(s.preconditions[0].item == "iron_ingot");
  CHECK(s.preconditions[0].n == 3);
}

TEST_CASE("subgoal guardrail threshold and majority") {
  const Vec3 x{20, 4, 20};
  std::vector<ExperienceTuple> f;
  for (int i = 0; i < 3; ++i) f.push_back(failure(FailureReason::nav_stuck, x, "d_00000" + std::to_string(i)));
  auto g = distill_subgoal_guardrail(f, 3);
  REQUIRE(g);
  CHECK(g->forbid == "mine oak log");
  CHECK(g->trigger.spatial_cell == spatial_hash(x));
  CHECK(g->trigger.reason == FailureReason::nav_stuck);
  CHECK_NOTHROW(g->check());

  CHECK_FALSE(distill_subgoal_guardrail({f[0], f[1]}, 3));

  for (int k = 1; k <= 6; ++k) {
    std::vector<ExperienceTuple> run;
    for (int i = 0; i < k - 1; ++i) run.push_back(failure(FailureReason::timeout, x, "d"));
    CHECK_FALSE(distill_subgoal_guardrail(run, k));
    run.push_back(failure(FailureReason::timeout, x, "d"));
    CHECK(distill_subgoal_guardrail(run, k));
  }

  auto mixed = f;
  mixed[2] = failure(FailureReason::timeout, x, "d_3");
  CHECK(distill_subgoal_guardrail(mixed, 3)->trigger.reason == FailureReason::nav_stuck);

  // One of each: priority decides (TOOL_MISSING outranks NAV_STUCK outranks TIMEOUT).
  std::vector<ExperienceTuple> tie = {failure(FailureReason::timeout, x, "a"), failure(FailureReason::nav_stuck, x, "b"),
                                      failure(FailureReason::tool_missing, x, "c")};
  CHECK(distill_subgoal_guardrail(tie, 3)->trigger.reason == FailureReason::tool_missing);

  auto broken = f;
  broken.insert(broken.begin() + 1, fx::tuple("mine oak log", TaskKind::mine, "oak_log", true));
  CHECK_FALSE(distill_subgoal_guardrail(broken, 3));

  auto other = f;
  other[0].action.condition = "craft plank";
  CHECK_THROWS_AS(distill_subgoal_guardrail(other, 3), ContractViolation);
}

TEST_CASE("task guardrail for a plan lacking the crafting table") {
  auto plan = plan_of({"oak_log", "plank", "stick", "wooden_pickaxe"});
  std::vector<ExperienceTuple> ep = {step("oak_log", 3, {}, {{"oak_log", 3}}, "d_000001")};
  auto g = distill_task_guardrail(ep, "craft wooden_pickaxe", plan);
  REQUIRE(g);
  CHECK(g->level == GuardLevel::task);
  REQUIRE(g->require.size() == 1);
  CHECK(g->require[0].condition == "craft crafting table");
  CHECK(g->trigger.goal_pattern == "craft *_pickaxe");
  CHECK(glob_match(*g->trigger.goal_pattern, "craft iron_pickaxe"));
  CHECK_NOTHROW(g->check());

  std::set<std::string> covered = {"oak_log", "plank", "stick", "wooden_pickaxe"};
  CHECK(oracle::first_uncovered("wooden_pickaxe", covered) == "crafting_table");

  CHECK_FALSE(distill_task_guardrail(ep, "craft wooden_pickaxe",
                                     plan_of({"oak_log", "plank", "stick", "crafting_table", "wooden_pickaxe"})));
}

TEST_CASE("task guardrail for iron pickaxe without smelting") {
  auto plan = plan_of({"oak_log", "plank", "stick", "crafting_table", "iron_pickaxe"});
  Inventory init = {{"iron_ore", 3}, {"stone_pickaxe", 1}, {"wooden_pickaxe", 1}, {"cobblestone", 8}};
  auto g = distill_task_guardrail({}, "craft iron_pickaxe", plan, sim::RecipeGraph::standard(), init);
  REQUIRE(g);
  std::set<std::string> covered = {"oak_log", "plank", "stick", "crafting_table", "iron_pickaxe",
                                   "iron_ore", "stone_pickaxe", "wooden_pickaxe", "cobblestone"};
  const auto want = oracle::first_uncovered("iron_pickaxe", covered);
  CHECK(want == "iron_ingot");
  CHECK(*produced_item(g->require[0]) == want);
  CHECK(g->require[0].condition == "smelt iron ingot");
  // Not every pickaxe needs ingots, so the pattern stays exact.
  CHECK(g->trigger.goal_pattern == "craft iron_pickaxe");

  auto with_ingot = plan_of({"oak_log", "plank", "stick", "crafting_table", "iron_ingot", "iron_pickaxe"});
  auto h = distill_task_guardrail({}, "craft iron_pickaxe", with_ingot, sim::RecipeGraph::standard(), init);
  REQUIRE(h);
  covered.insert("iron_ingot");
  CHECK(*produced_item(h->require[0]) == oracle::first_uncovered("iron_pickaxe", covered));
  CHECK(*produced_item(h->require[0]) == "furnace");
}

TEST_CASE("commit dedups, routes scopes and grows monotonically") {
  KnowledgeBase kb;
  const Vec3 x{20, 4, 20};
  std::vector<ExperienceTuple> f;
  for (int i = 0; i < 3; ++i) f.push_back(failure(FailureReason::nav_stuck, x, "d_00000" + std::to_string(i)));
  auto g = *distill_subgoal_guardrail(f, 3);
  auto r1 = kb.commit(g, "wooden");
  CHECK(r1.inserted);
  const auto v1 = kb.version();
  auto r2 = kb.commit(g, "wooden");
  CHECK_FALSE(r2.changed);
  CHECK(kb.version() == v1);
  CHECK(kb.guardrails().size() == 1);

  auto g2 = g;
  g2.provenance = {"d_000009"};
  kb.commit(g2, "wooden");
  CHECK(kb.guardrails().size() == 1);
  CHECK(kb.guardrails()[0].provenance.size() == 4);
  CHECK(kb.version() == v1 + 1);
  CHECK(kb.guardrails()[0].hit_count == 0);

  std::vector<ExperienceTuple> traj = {step("oak_log", 1, {}, {{"oak_log", 1}}, "d_000001")};
  auto s1 = distill_skill(traj, "mine oak_log");
  std::vector<ExperienceTuple> traj2 = {step("cobblestone", 1, {}, {{"cobblestone", 1}}, "d_000002")};
  auto s2 = distill_skill(traj2, "mine cobblestone");
  kb.commit(s1, "wooden");
  kb.commit(s2, "stone");
  CHECK(kb.skills_in_scope("global").size() == 2);
  CHECK(kb.skills_in_scope("wooden").size() == 1);
  CHECK(kb.skills_in_scope("stone").size() == 1);

  KnowledgeBase once, many;
  once.commit(s1, "wooden");
  for (int i = 0; i < 5; ++i) many.commit(s1, "wooden");
  REQUIRE(many.skills().size() == 1);
  auto a = once.skills()[0], b = many.skills()[0];
  a.use_count = b.use_count = a.success_count = b.success_count = 0;
  CHECK(a == b);
}

TEST_CASE("guardrail matching") {
  KnowledgeBase kb;
  MatchContext ctx;
  ctx.goal = "craft iron_pickaxe";
  CHECK(match_guardrails(kb, ctx).empty());

  const Vec3 x{20, 4, 20};
  std::vector<ExperienceTuple> f;
  for (int i = 0; i < 3; ++i) f.push_back(failure(FailureReason::nav_stuck, x, "d"));
  kb.commit(*distill_subgoal_guardrail(f, 3), "wooden");
  auto plan = plan_of({"oak_log", "plank", "stick", "wooden_pickaxe"});
  kb.commit(*distill_task_guardrail({}, "craft wooden_pickaxe", plan), "wooden");

  ctx.task_kinds = {TaskKind::mine};
  ctx.cond_sigs = {condition_hash(TaskKind::mine, "mine oak log")};
  ctx.spatial_cell = spatial_hash(x);
  auto m = match_guardrails(kb, ctx);
  REQUIRE(m.size() == 2);
  CHECK(m[0].level == GuardLevel::task);
  CHECK(m[1].level == GuardLevel::subgoal);

  ctx.spatial_cell = spatial_hash({0, 4, 0});
  CHECK(match_guardrails(kb, ctx).size() == 1);
  ctx.available = {{"crafting_table", 1}};
  CHECK(match_guardrails(kb, ctx).empty());
  ctx.available.clear();
  ctx.goal = "craft furnace";
  CHECK(match_guardrails(kb, ctx).empty());
}

TEST_CASE("knowledge yaml and json round-trip") {
  KnowledgeBase kb;
  std::vector<ExperienceTuple> traj = {step("oak_log", 1, {}, {{"oak_log", 1}}, "d_000001"),
                                       step("plank", 4, {{"oak_log", 1}}, {{"plank", 4}}, "d_000002")};
  kb.commit(distill_skill(traj, "craft plank"), "wooden");
  std::vector<ExperienceTuple> f;
  for (int i = 0; i < 3; ++i) f.push_back(failure(FailureReason::nav_stuck, {20, 4, 20}, "d"));
  kb.commit(*distill_subgoal_guardrail(f, 3), "wooden");
  kb.commit(*distill_task_guardrail({}, "craft wooden_pickaxe", plan_of({"oak_log", "plank", "stick", "wooden_pickaxe"})), "wooden");

  auto skills = skills_from_yaml(skills_to_yaml(kb.skills()));
  REQUIRE(skills.size() == 1);
  CHECK(skills[0] == kb.skills()[0]);
  auto guards = failures_from_yaml(failures_to_yaml(kb.guardrails()));
  REQUIRE(guards.size() == 2);
  CHECK(guards[0] == kb.guardrails()[0]);
  CHECK(guards[1] == kb.guardrails()[1]);
  CHECK(KnowledgeBase::from_json(kb.to_json()) == kb);

  auto card = skills_from_yaml(
      "name: collect_wood\ngoal: collect logs and craft planks\npreconditions: [\"near trees\"]\n"
      "steps: [\"mine oak log\", \"craft plank\"]\n");
  REQUIRE(card.size() == 1);
  CHECK(card[0].steps.size() == 2);
  CHECK(card[0].steps[1].task_kind == TaskKind::craft);
  CHECK(parse_check_text("inv_ge iron_pickaxe 1")->item == "iron_pickaxe");

  fx::TempDir tmp("kb");
  kb.save(tmp.path);
  CHECK(KnowledgeBase::load(tmp.path) == kb);
}
