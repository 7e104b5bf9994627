#include <doctest.h>

#include <random>

#include "evo/diagnosis/diagnosis.hpp"
#include "evo/error.hpp"
#include "evo/model/plan.hpp"
#include "oracles/stagnation_oracle.hpp"

using namespace evo;

namespace {

AttemptTrace still_trace(int n, Vec3 at = {16, 4, 16}) {
  AttemptTrace t;
  for (int i = 0; i < n; ++i) t.steps.push_back({at, {}, false, i, 20.0});
  return t;
}

CheckSpec inv_ge(const std::string& item, int n) {
  CheckSpec c;
  c.item = item;
  c.n = n;
  return c;
}

StateSnapshot snap() {
  StateSnapshot s;
  s.episode_id = "ep";
  return s;
}

}  // namespace

TEST_CASE("monitor conjunction") {
  auto s = snap();
  s.inventory = {{"oak_log", 1}};
  CHECK(compile_checks({inv_ge("oak_log", 1)})(s));
  CHECK(compile_checks({})(s));

  CheckSpec closed;
  closed.kind = CheckKind::gui_is_closed;
  s.inventory = {{"oak_log", 2}};
  s.gui_open = true;
  s.gui_state = GuiState::open;
  CHECK_FALSE(compile_checks({inv_ge("oak_log", 2), closed})(s));
  s.gui_open = false;
  s.gui_state = GuiState::closed;
  CHECK(compile_checks({inv_ge("oak_log", 2), closed})(s));
}

TEST_CASE("every check kind evaluates against its observable") {
  auto s = snap();
  s.coords_start = {0, 4, 0};
  s.coords = {3, 4, 4};
  s.inventory = {{"plank", 4}};
  s.inv_delta = {{"plank", 4}};
  s.selected_item = "wooden_pickaxe";
  s.gui_events = {2, 2};
  s.world_time = 100;
  s.furnace_burn = 0.5;
  s.furnace_cook = 1.0;
  s.container_items = 3;
  s.crafted_items = {"plank"};

  auto mk = [](CheckKind k) {
    CheckSpec c;
    c.kind = k;
    return c;
  };
  auto c = mk(CheckKind::inv_delta_ge);
  c.item = "plank";
  c.n = 4;
  CHECK(evaluate_check(c, s));
  c.n = 5;
  CHECK_FALSE(evaluate_check(c, s));
  c = mk(CheckKind::equipped_is);
  c.item = "wooden_pickaxe";
  CHECK(evaluate_check(c, s));
  c = mk(CheckKind::coord_near);
  c.target = Vec3{3, 4, 5};
  c.radius = 1.0;
  CHECK(evaluate_check(c, s));
  c = mk(CheckKind::coord_moved_ge);
  c.radius = 5.0;
  CHECK(evaluate_check(c, s));
  c.radius = 5.1;
  CHECK_FALSE(evaluate_check(c, s));
  CHECK(evaluate_check(mk(CheckKind::gui_is_closed), s));
  CHECK_FALSE(evaluate_check(mk(CheckKind::gui_is_open), s));
  c = mk(CheckKind::gui_events_ge);
  c.n = 2;
  CHECK(evaluate_check(c, s));
  c = mk(CheckKind::world_time_ge);
  c.n = 101;
  CHECK_FALSE(evaluate_check(c, s));
  CHECK(evaluate_check(mk(CheckKind::furnace_burn_active), s));
  c = mk(CheckKind::furnace_cook_ge);
  c.n = 1;
  CHECK(evaluate_check(c, s));
  c = mk(CheckKind::container_count_ge);
  c.n = 4;
  CHECK_FALSE(evaluate_check(c, s));
  c = mk(CheckKind::crafted_contains);
  c.item = "plank";
  CHECK(evaluate_check(c, s));
}

TEST_CASE("stagnation basics") {
  StagnationConfig cfg;
  CHECK(detect_stagnation(still_trace(20), cfg) == true);
  CHECK_FALSE(detect_stagnation(still_trace(19), cfg).has_value());

  auto gaining = still_trace(30);
  for (int i = 0; i < 30; ++i) gaining.steps[i].inventory = {{"dirt", i}};
  CHECK(detect_stagnation(gaining, cfg) == false);
}

TEST_CASE("stagnation matches the brute-force oracle on random traces") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> step(-0.6, 0.6);
  std::uniform_int_distribution<int> coin(0, 39);
  for (int trial = 0; trial < 1000; ++trial) {
    StagnationConfig cfg;
    cfg.window_k = 2 + trial % 30;
    cfg.eps_nav = 0.05 + 0.05 * (trial % 7);
    cfg.eps_inv = trial % 3;
    AttemptTrace t;
    Vec3 p{16, 4, 16};
    int logs = 0;
    const int n = trial < 10 ? 200 : 40 + trial % 60;
    const double scale = (trial % 4) * 0.3;
    for (int i = 0; i < n; ++i) {
      p.x += scale * step(rng);
      p.z += scale * step(rng);
      if (coin(rng) == 0) ++logs;
      t.steps.push_back({p, {{"oak_log", logs}}, false, i, 20});
    }
    auto got = stagnation_profile(t, cfg);
    auto want = oracle::stagnation_all_windows(t, cfg);
    REQUIRE(got == want);
    if (!got.empty()) CHECK(detect_stagnation(t, cfg) == got.back());
  }
}

TEST_CASE("still trace stays stagnant for every sub-window") {
  auto t = still_trace(40);
  for (int k = 2; k <= 40; ++k) {
    StagnationConfig cfg;
    cfg.window_k = k;
    CHECK(detect_stagnation(t, cfg) == true);
  }
}

TEST_CASE("failure classification") {
  StagnationConfig cfg;
  auto still = still_trace(40);

  auto term = still;
  term.env_terminated = true;
  term.risk_abort = true;
  CHECK(classify_failure(term, false, true, cfg) == FailureReason::env_terminated);

  CHECK(classify_failure(still, false, true, cfg) == FailureReason::nav_stuck);

  AttemptTrace pacing;
  for (int i = 0; i < 40; ++i) pacing.steps.push_back({{16.0 + (i % 2) * 0.5, 4, 16}, {}, false, i, 20});
  auto w = final_window_stats(pacing, cfg.window_k);
  REQUIRE(w);
  CHECK(w->variance > 0.0);
  CHECK(w->net_displacement < cfg.oscillation_net_disp);
  CHECK(classify_failure(pacing, false, true, cfg) == FailureReason::nav_oscillate);

  AttemptTrace gui = still_trace(12);
  for (int i = 0; i < 12; ++i) gui.steps[i].gui_open = (i % 2 == 1);
  CHECK(gui_cycles(gui) == 5);
  CHECK(classify_failure(gui, false, true, cfg) == FailureReason::gui_blocked);

  AttemptTrace walk;
  for (int i = 0; i < 40; ++i) walk.steps.push_back({{16.0 + i, 4, 16}, {}, false, i, 20});
  CheckSpec near;
  near.kind = CheckKind::coord_near;
  near.target = Vec3{0, 4, 0};
  near.radius = 2;
  CHECK(classify_failure(walk, false, true, cfg, {near}) == FailureReason::path_unreachable);
  CHECK(classify_failure(walk, false, true, cfg) == FailureReason::monitor_never_true);
  CHECK(classify_failure(walk, true, true, cfg) == FailureReason::timeout);
  CHECK(classify_failure(walk, true, false, cfg) == FailureReason::unknown);

  auto tool = walk;
  tool.tool_missing = true;
  CHECK(classify_failure(tool, false, true, cfg) == FailureReason::tool_missing);
  tool.action_rejected = true;
  CHECK(classify_failure(tool, false, true, cfg) == FailureReason::action_invalid);
}

TEST_CASE("diagnose builds a consistent record") {
  StagnationConfig cfg;
  SubgoalSpec sg;
  sg.subgoal_id = "sg_001";
  sg.condition = "mine oak log";
  sg.checks = {inv_ge("oak_log", 1)};

  auto pre = snap();
  auto post = snap();
  post.world_time = 40;
  auto still = still_trace(40);
  auto rec = diagnose(pre, post, sg, still, {false, false, true}, cfg);
  CHECK_FALSE(rec.outcome);
  CHECK(rec.failure_reason == FailureReason::nav_stuck);
  CHECK(rec.indicators[kCoordVariance] == final_window_stats(still, cfg.window_k)->variance);

  post.inventory = {{"oak_log", 1}};
  auto ok = diagnose(pre, post, sg, still, {true, true, false}, cfg);
  CHECK(ok.outcome);
  CHECK_FALSE(ok.failure_reason.has_value());
  CHECK(ok.state_diff.inventory == InvDelta{{"oak_log", 1}});

  auto other = post;
  other.episode_id = "x";
  CHECK_THROWS_AS(diagnose(pre, other, sg, still, {true, true, false}, cfg), ContractViolation);
}
