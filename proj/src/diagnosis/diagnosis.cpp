#include "evo/diagnosis/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "evo/error.hpp"
#include "evo/model/plan.hpp"

namespace evo {

void AttemptTrace::check() const {
  if (steps.empty()) throw ContractViolation("attempt trace is empty");
  for (std::size_t i = 1; i < steps.size(); ++i)
    if (steps[i].world_time <= steps[i - 1].world_time)
      throw ContractViolation("attempt trace world_time not strictly increasing at step " + std::to_string(i));
}

void StagnationConfig::check() const {
  if (window_k < 2) throw ConfigError("window_k must be >= 2");
  if (!(eps_nav > 0)) throw ConfigError("eps_nav must be > 0");
  if (eps_inv < 0) throw ConfigError("eps_inv must be >= 0");
  if (!(oscillation_net_disp > 0)) throw ConfigError("oscillation_net_disp must be > 0");
  if (gui_cycles < 1) throw ConfigError("gui_cycles must be >= 1");
  if (!(still_fraction > 0 && still_fraction <= 1)) throw ConfigError("still_fraction must be in (0,1]");
}

namespace {

int count_of(const Inventory& inv, const std::string& item) {
  auto it = inv.find(item);
  return it == inv.end() ? 0 : it->second;
}

std::int64_t l1(const Inventory& a, const Inventory& b) {
  std::int64_t s = 0;
  for (const auto& [item, n] : inventory_delta(a, b)) s += std::abs(n);
  return s;
}

}  // namespace

bool evaluate_check(const CheckSpec& c, const StateSnapshot& s) {
  const std::int64_t n = c.n.value_or(0);
  switch (c.kind) {
    case CheckKind::inv_ge: return count_of(s.inventory, *c.item) >= n;
    case CheckKind::inv_delta_ge: return count_of(s.inv_delta, *c.item) >= n;
    case CheckKind::equipped_is: return s.selected_item == *c.item;
    case CheckKind::coord_near: return distance(s.coords, *c.target) <= *c.radius;
    case CheckKind::coord_moved_ge: return distance(s.coords, s.coords_start) >= *c.radius;
    case CheckKind::gui_is_open: return s.gui_open;
    case CheckKind::gui_is_closed: return !s.gui_open;
    case CheckKind::gui_events_ge: return s.gui_events.open_count >= n;
    case CheckKind::world_time_ge: return s.world_time >= n;
    case CheckKind::furnace_burn_active: return s.furnace_burn > 0.0;
    case CheckKind::furnace_cook_ge: return s.furnace_cook >= static_cast<double>(n);
    case CheckKind::container_count_ge: return s.container_items >= n;
    case CheckKind::crafted_contains:
      return std::find(s.crafted_items.begin(), s.crafted_items.end(), *c.item) != s.crafted_items.end();
  }
  return false;
}

Monitor compile_checks(std::vector<CheckSpec> checks) {
  for (std::size_t i = 0; i < checks.size(); ++i) {
    json j = checks[i];
    validate_check(j, "checks[" + std::to_string(i) + "]", false);
  }
  return [checks = std::move(checks)](const StateSnapshot& s) {
    return std::all_of(checks.begin(), checks.end(), [&](const CheckSpec& c) { return evaluate_check(c, s); });
  };
}

std::optional<WindowStats> window_stats(const AttemptTrace& trace, int k, std::size_t end) {
  if (k < 1 || end >= trace.steps.size() || end + 1 < static_cast<std::size_t>(k)) return std::nullopt;
  const std::size_t begin = end + 1 - static_cast<std::size_t>(k);
  const auto& st = trace.steps;

  double mx = 0, my = 0, mz = 0;
  for (std::size_t i = begin; i <= end; ++i) {
    mx += st[i].coords.x;
    my += st[i].coords.y;
    mz += st[i].coords.z;
  }
  mx /= k;
  my /= k;
  mz /= k;
  double vx = 0, vy = 0, vz = 0;
  for (std::size_t i = begin; i <= end; ++i) {
    vx += (st[i].coords.x - mx) * (st[i].coords.x - mx);
    vy += (st[i].coords.y - my) * (st[i].coords.y - my);
    vz += (st[i].coords.z - mz) * (st[i].coords.z - mz);
  }

  WindowStats w;
  w.variance = (vx / k + vy / k + vz / k) / 3.0;
  int still = 0;
  for (std::size_t i = begin; i <= end; ++i) {
    if (i == 0) {
      ++still;
      continue;
    }
    w.inv_l1 += l1(st[i - 1].inventory, st[i].inventory);
    if (distance(st[i].coords, st[i - 1].coords) < 0.05) ++still;
  }
  w.still_fraction = static_cast<double>(still) / k;
  w.net_displacement = distance(st[end].coords, st[begin].coords);
  return w;
}

std::optional<WindowStats> final_window_stats(const AttemptTrace& trace, int k) {
  if (trace.steps.empty()) return std::nullopt;
  return window_stats(trace, k, trace.steps.size() - 1);
}

namespace {

bool stagnant(const WindowStats& w, const StagnationConfig& cfg) {
  return w.variance < cfg.eps_nav && w.inv_l1 <= cfg.eps_inv;
}

}  // namespace

std::optional<bool> detect_stagnation(const AttemptTrace& trace, const StagnationConfig& cfg) {
  auto w = final_window_stats(trace, cfg.window_k);
  if (!w) return std::nullopt;
  return stagnant(*w, cfg);
}

std::vector<bool> stagnation_profile(const AttemptTrace& trace, const StagnationConfig& cfg) {
  std::vector<bool> out;
  const auto k = static_cast<std::size_t>(cfg.window_k);
  for (std::size_t end = k - 1; end < trace.steps.size(); ++end) out.push_back(stagnant(*window_stats(trace, cfg.window_k, end), cfg));
  return out;
}

int gui_cycles(const AttemptTrace& trace) {
  int cycles = 0;
  for (std::size_t i = 1; i < trace.steps.size(); ++i)
    if (trace.steps[i - 1].gui_open && !trace.steps[i].gui_open) ++cycles;
  return cycles;
}

FailureReason classify_failure(const AttemptTrace& trace, bool monitor_ever_true, bool timed_out,
                               const StagnationConfig& cfg, const std::vector<CheckSpec>& checks) {
  if (trace.env_terminated) return FailureReason::env_terminated;
  if (trace.risk_abort) return FailureReason::risk_abort;
  if (trace.action_rejected) return FailureReason::action_invalid;
  if (trace.tool_missing) return FailureReason::tool_missing;

  if (!trace.steps.empty()) {
    std::int64_t total_l1 = 0;
    for (std::size_t i = 1; i < trace.steps.size(); ++i)
      total_l1 += l1(trace.steps[i - 1].inventory, trace.steps[i].inventory);
    if (gui_cycles(trace) >= cfg.gui_cycles && total_l1 == 0) return FailureReason::gui_blocked;
  }

  if (auto w = final_window_stats(trace, cfg.window_k); w && stagnant(*w, cfg)) {
    // The stillness test uses the configured step threshold, recomputed here
    // so that window_stats stays independent of the config.
    const auto& st = trace.steps;
    const std::size_t begin = st.size() - static_cast<std::size_t>(cfg.window_k);
    int still = 0;
    for (std::size_t i = begin; i < st.size(); ++i)
      if (i == 0 || distance(st[i].coords, st[i - 1].coords) < cfg.still_step) ++still;
    if (static_cast<double>(still) / cfg.window_k >= cfg.still_fraction) return FailureReason::nav_stuck;
    if (w->net_displacement < cfg.oscillation_net_disp) return FailureReason::nav_oscillate;
  }

  if (timed_out) {
    for (const auto& c : checks) {
      if (c.kind != CheckKind::coord_near) continue;
      const bool reached = std::any_of(trace.steps.begin(), trace.steps.end(), [&](const TraceStep& s) {
        return distance(s.coords, *c.target) <= *c.radius;
      });
      if (!reached) return FailureReason::path_unreachable;
    }
  }

  if (!monitor_ever_true) return FailureReason::monitor_never_true;
  if (timed_out) return FailureReason::timeout;
  return FailureReason::unknown;
}

DiagnosisRecord diagnose(const StateSnapshot& pre, const StateSnapshot& post, const SubgoalSpec& subgoal,
                         const AttemptTrace& trace, const AttemptOutcome& outcome, const StagnationConfig& cfg) {
  StateDiff diff = compute_state_diff(pre, post);

  Indicators ind{};
  auto w = final_window_stats(trace, cfg.window_k);
  if (!w && !trace.steps.empty()) w = final_window_stats(trace, static_cast<int>(trace.steps.size()));
  ind[kCoordVariance] = w ? w->variance : 0.0;
  double inv_mag = 0;
  for (const auto& [item, n] : diff.inventory) inv_mag += std::abs(n);
  ind[kInvChangeL1] = inv_mag;
  ind[kGuiOpens] = post.gui_events.open_count;
  ind[kGuiCloses] = post.gui_events.close_count;
  ind[kNetDisplacement] = diff.displacement.norm();
  ind[kHealthDelta] = post.health - pre.health;

  std::optional<FailureReason> reason;
  if (!outcome.monitor_result)
    reason = classify_failure(trace, outcome.monitor_ever_true, outcome.timed_out, cfg, subgoal.checks);
  std::vector<std::string> missing;
  if (reason == FailureReason::tool_missing) missing = trace.missing;
  return DiagnosisRecord::make(outcome.monitor_result, std::move(diff), reason, ind, std::move(missing));
}

}  // namespace evo
