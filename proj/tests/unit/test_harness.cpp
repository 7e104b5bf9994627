#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "evo/error.hpp"
#include "evo/harness/run.hpp"
#include "evo/harness/suite.hpp"
#include "evo/harness/yaml_json.hpp"
#include "fixtures.hpp"

using namespace evo;

namespace {

RunConfig small(std::vector<std::string> tasks, Strategy s = Strategy::self_learning) {
  RunConfig c;
  c.tasks = std::move(tasks);
  c.strategy = s;
  c.seeds = {1, 2, 3};
  c.eval_seeds = {101, 102};
  return c;
}

FaultConfig faulty(double rate = 1.0) {
  FaultConfig f;
  f.omit_stations = true;
  f.rate = rate;
  return f;
}

}  // namespace

TEST_CASE("shipped suite") {
  const auto suite = standard_suite();
  REQUIRE(suite.size() == 8);
  CHECK(suite.front().task_id == "gather_logs");
  CHECK(suite.back().task_id == "craft_iron_pickaxe");
  CHECK(tasks_in_group(suite, "stone").size() == 3);
  for (const auto& t : suite) CHECK_NOTHROW(t.check());
  CHECK(resolve_tasks(suite, {"iron", "gather_logs"}).size() == 3);
  CHECK(resolve_tasks(suite, {"iron", "gather_logs"}).front().task_id == "gather_logs");
  CHECK_THROWS_AS(resolve_tasks(suite, {"diamond"}), ConfigError);
}

TEST_CASE("suite file round trip") {
  fx::TempDir dir("suite");
  const auto path = dir.path / "suite.yaml";
  std::ofstream(path) << "tasks:\n"
                         "  - task_id: logs\n"
                         "    group: wooden\n"
                         "    goal: mine 2 oak_log\n"
                         "    success_checks: [{type: inv_ge, item: oak_log, n: 2}]\n"
                         "    step_budget: 900\n";
  const auto suite = load_suite(path.string());
  REQUIRE(suite.size() == 1);
  CHECK(suite[0].step_budget == 900);
  CHECK(suite[0].success_checks[0].n == 2);
}

TEST_CASE("config overrides") {
  json j = RunConfig().to_json();
  apply_override(j, "--k_tol", "2");
  apply_override(j, "K", "5");
  apply_override(j, "w", "64");
  apply_override(j, "alpha", "0.6");
  apply_override(j, "window-k", "12");
  apply_override(j, "eps_nav", "0.5");
  apply_override(j, "seeds", "1..3");
  apply_override(j, "eval_seeds", "7,9");
  apply_override(j, "ablation", "no_guard_distill");
  apply_override(j, "strategy", "cold_start");
  apply_override(j, "fault_rate", "0.25");
  apply_override(j, "planner.endpoint.model", "m1");
  const auto c = RunConfig::from_json(j);
  CHECK(c.controller.k_tol == 2);
  CHECK(c.controller.recall.k == 5);
  CHECK(c.store.rollup_window == 64);
  CHECK(c.controller.recall.alpha == 0.6);
  CHECK(c.controller.stagnation.window_k == 12);
  CHECK(c.controller.stagnation.eps_nav == 0.5);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.eval_seeds == std::vector<std::uint64_t>{7, 9});
  CHECK(c.controller.ablations.no_guard_distill);
  CHECK(c.strategy == Strategy::cold_start);
  CHECK(c.planner.faults.rate == 0.25);
  CHECK(c.planner.endpoint.model == "m1");
  CHECK_THROWS_AS(apply_override(j, "no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "seeds", "5..1"), ConfigError);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(RunConfig::from_json(parse_config_text("strategy: self_learning\nseeds: [1, 2]\n")));
  CHECK_THROWS_AS(RunConfig::from_json(parse_config_text("strategy: mixed_sampling\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(parse_config_text("strategy: greedy\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(parse_config_text("seeds: [1]\neval_seeds: [1]\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(parse_config_text("sedes: [1]\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(parse_config_text("controller: {k_tol: 0}\n")), ConfigError);

  const auto c = RunConfig::from_json(parse_config_text(
      "strategy: pretrain_freeze\neasy_pool: [wooden]\nhard_pool: [stone]\ncontroller: {ablations: [planning_only]}\n"));
  CHECK(c.controller.ablations.planning_only);
  CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("external backend needs its token") {
  PlannerSettings s;
  s.backend = "external";
  s.endpoint.api_key_env = "EVO_TEST_TOKEN_THAT_IS_NOT_SET";
  ::unsetenv(s.endpoint.api_key_env.c_str());
  CHECK_THROWS_AS(make_planner(s), ConfigError);
  ::setenv(s.endpoint.api_key_env.c_str(), "x", 1);
  CHECK(make_planner(s)->name() == "external");
  ::unsetenv(s.endpoint.api_key_env.c_str());
  s.backend = "oracle";
  CHECK_THROWS_AS(make_planner(s), ConfigError);
}

TEST_CASE("cold start keeps the knowledge empty and reports are reproducible") {
  const auto cfg = small({"gather_logs", "craft_planks"}, Strategy::cold_start);
  const auto a = run_eval(cfg);
  CHECK(a.training.size() == 6);
  CHECK(a.kb_version_start == a.kb_version_end);
  CHECK(a.kb_skills == 0);
  REQUIRE(a.checkpoints.size() == 5);
  CHECK(a.checkpoints.front().percent == 20);
  CHECK(a.checkpoints.back().after_episode == 6);
  CHECK(a.evaluation.size() == 5 * 2 * 2);
  const auto b = run_eval(cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.to_text() == b.to_text());
  CHECK(a.to_text().find("craft_planks") != std::string::npos);
}

TEST_CASE("self learning grows knowledge and does not regress") {
  auto cfg = small({"craft_wooden_pickaxe"});
  cfg.planner.faults = faulty();
  const auto r = run_eval(cfg);
  CHECK(r.kb_version_end > r.kb_version_start);
  CHECK(r.checkpoints.back().sr() >= r.checkpoints.front().sr());
  CHECK(r.checkpoints.back().sr() == 1.0);
  for (std::size_t i = 1; i < r.training.size(); ++i) CHECK(r.training[i].kb_version >= r.training[i - 1].kb_version);
  const auto j = r.to_json();
  CHECK(j.at("kb").at("growth").size() == r.training.size());
  CHECK(j.at("training").at("per_group").at(0).at("group") == "wooden");
}

TEST_CASE("ablation soundness over a sweep") {
  SUBCASE("planning only") {
    auto cfg = small({"craft_wooden_pickaxe", "craft_planks"});
    cfg.planner.faults = faulty();
    cfg.controller.ablations.planning_only = true;
    cfg.checkpoints = false;
    const auto r = run_eval(cfg);
    CHECK(r.kb_version_end == r.kb_version_start);
    for (const auto& row : r.training) CHECK(row.replans == 0);
    CHECK(r.checkpoints.empty());
  }
  SUBCASE("no guard distillation") {
    auto cfg = small({"craft_wooden_pickaxe"});
    cfg.planner.faults = faulty();
    cfg.controller.ablations.no_guard_distill = true;
    cfg.checkpoints = false;
    const auto r = run_eval(cfg);
    CHECK(r.kb_guardrails == 0);
  }
}

TEST_CASE("curricula") {
  SUBCASE("pretrain then freeze") {
    auto cfg = small({});
    cfg.strategy = Strategy::pretrain_freeze;
    cfg.easy_pool = {"craft_planks"};
    cfg.hard_pool = {"craft_wooden_pickaxe"};
    const auto r = run_eval(cfg);
    REQUIRE(r.training.size() == 6);
    std::int64_t frozen_at = -1;
    for (const auto& row : r.training) {
      if (row.phase == "pretrain") {
        CHECK(row.task_id == "craft_planks");
        frozen_at = row.kb_version;
      } else {
        CHECK(row.phase == "target");
        CHECK(row.kb_version == frozen_at);
      }
    }
    CHECK(r.training.back().phase == "target");
  }
  SUBCASE("mixed sampling alternates pools") {
    auto cfg = small({});
    cfg.strategy = Strategy::mixed_sampling;
    cfg.easy_pool = {"gather_logs", "craft_planks"};
    cfg.hard_pool = {"craft_wooden_pickaxe"};
    cfg.checkpoints = false;
    const auto r = run_eval(cfg);
    REQUIRE(r.training.size() == 12);
    for (std::size_t i = 0; i < r.training.size(); ++i) CHECK(r.training[i].phase == (i % 2 ? "hard" : "easy"));
    CHECK(r.training[1].task_id == "craft_wooden_pickaxe");
  }
  SUBCASE("explicit episode budget") {
    auto cfg = small({});
    cfg.strategy = Strategy::mixed_sampling;
    cfg.easy_pool = {"gather_logs"};
    cfg.hard_pool = {"craft_planks"};
    cfg.episodes = 5;
    cfg.checkpoints = false;
    CHECK(run_eval(cfg).training.size() == 5);
  }
}

TEST_CASE("run artifacts") {
  fx::TempDir dir("run");
  auto cfg = small({"gather_logs"});
  cfg.seeds = {4};
  cfg.checkpoints = false;
  cfg.store_dir = (dir.path / "store").string();
  cfg.kb_out = (dir.path / "kb").string();
  cfg.log_dir = (dir.path / "logs").string();
  const auto r = run_eval(cfg);
  r.write(dir.path / "report");
  CHECK(std::filesystem::exists(dir.path / "report" / "report.json"));
  CHECK(std::filesystem::exists(dir.path / "report" / "report.txt"));
  CHECK(std::filesystem::exists(dir.path / "logs" / "ep_0001.jsonl"));
  const auto kb = KnowledgeBase::load(cfg.kb_out);
  CHECK(kb.skills().size() == 1);
  auto store = ExperienceStore::open(cfg.store_dir, cfg.store);
  CHECK(store->size() == static_cast<std::size_t>(r.training[0].attempts));

  // A second run picks the knowledge back up.
  auto again = cfg;
  again.kb_in = cfg.kb_out;
  again.kb_out.clear();
  again.store_dir.clear();
  auto ctx = RunContext::from_config(again);
  CHECK(ctx.kb.skills().size() == 1);
  const auto ep = run_single(again, ctx, "gather_logs", 9);
  CHECK(ep.success);
}
