#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "evo/model/plan.hpp"

namespace fx {

inline evo::ExperienceTuple tuple(const std::string& condition, evo::TaskKind kind, const std::string& item,
                                  bool ok, std::optional<evo::FailureReason> reason = std::nullopt,
                                  evo::Vec3 at = {16, 4, 16}, std::int64_t t0 = 0) {
  using namespace evo;
  ExperienceTuple e;
  e.episode_id = "ep_1";
  e.s_pre.episode_id = e.s_post.episode_id = "ep_1";
  e.s_pre.coords = e.s_pre.coords_start = at;
  e.s_post.coords = e.s_post.coords_start = at;
  e.s_pre.world_time = t0;
  e.s_post.world_time = t0 + 20;
  if (ok) {
    e.s_post.inventory = {{item, 1}};
    e.s_post.inv_delta = {{item, 1}};
  }
  e.action.subgoal_id = "sg_001";
  e.action.condition = condition;
  e.action.task_kind = kind;
  CheckSpec c;
  c.item = item;
  c.n = 1;
  e.action.checks = {c};
  if (!ok && !reason) reason = FailureReason::nav_stuck;
  e.diagnosis = DiagnosisRecord::make(ok, compute_state_diff(e.s_pre, e.s_post), ok ? std::nullopt : reason, {});
  return e;
}

inline evo::ExperienceTuple random_tuple(std::mt19937_64& rng) {
  using namespace evo;
  static const char* conds[] = {"mine oak log", "craft plank", "craft stick", "mine stone", "smelt iron ingot",
                                "craft crafting table", "mine iron ore"};
  static const char* items[] = {"oak_log", "plank", "stick", "cobblestone", "iron_ingot", "crafting_table",
                                "iron_ore"};
  const int c = static_cast<int>(rng() % 7);
  const TaskKind kind = c == 0 || c == 3 || c == 6 ? TaskKind::mine : c == 4 ? TaskKind::use : TaskKind::craft;
  const bool ok = rng() % 3 != 0;
  const auto& reasons = all_failure_reasons();
  std::optional<FailureReason> reason;
  if (!ok) reason = reasons[rng() % reasons.size()];
  Vec3 at{static_cast<double>(rng() % 40) - 4, 4, static_cast<double>(rng() % 40) - 4};
  return tuple(conds[c], kind, items[c], ok, reason, at);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("evo_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace fx

#include "evo/recall/encoder.hpp"
#include "evo/recall/recall.hpp"

namespace fx {

inline evo::RecallContext random_context(std::mt19937_64& rng) {
  using namespace evo;
  static const char* goals[] = {"craft wooden_pickaxe", "craft iron_pickaxe", "mine 3 oak_log", "craft furnace",
                                "smelt iron_ingot"};
  static const char* conds[] = {"mine oak log", "craft plank", "craft stick", "mine stone", "smelt iron ingot",
                                "craft crafting table", "mine iron ore", "open the furnace"};
  static const TaskKind kinds[] = {TaskKind::mine, TaskKind::craft, TaskKind::use};
  RecallContext ctx;
  ctx.goal = goals[rng() % 5];
  const int n = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < n; ++i) ctx.pending.push_back({kinds[rng() % 3], conds[rng() % 8]});
  ctx.coords = {static_cast<double>(rng() % 32), 4, static_cast<double>(rng() % 32)};
  ctx.zone = zone_label(ctx.coords);
  if (rng() % 2) ctx.held = "wooden_pickaxe";
  return ctx;
}

}  // namespace fx
