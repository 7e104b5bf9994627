#include "evo/model/types.hpp"

#include <algorithm>
#include <set>

#include "evo/error.hpp"

namespace evo {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

constexpr std::array<std::string_view, kCheckKindCount> kCheckNames = {
    "inv_ge",        "inv_delta_ge",   "equipped_is",         "coord_near",      "coord_moved_ge",
    "gui_is_open",   "gui_is_closed",  "gui_events_ge",       "world_time_ge",   "furnace_burn_active",
    "furnace_cook_ge", "container_count_ge", "crafted_contains",
};

constexpr std::array<std::string_view, 5> kTaskKindNames = {"mine", "craft", "use", "combat", "wait"};
constexpr std::array<std::string_view, 3> kHintNames = {"default", "craft_station", "wait"};
constexpr std::array<std::string_view, 2> kModeNames = {"move", "stay"};

constexpr std::array<std::string_view, kFailureReasonCount> kReasonNames = {
    "NAV_STUCK", "NAV_OSCILLATE", "PATH_UNREACHABLE", "GUI_BLOCKED", "MONITOR_NEVER_TRUE", "TOOL_MISSING",
    "TIMEOUT",   "ENV_TERMINATED", "ACTION_INVALID",  "RISK_ABORT",  "UNKNOWN",
};

}  // namespace

std::string_view to_string(CheckKind k) { return kCheckNames.at(static_cast<std::size_t>(k)); }
std::optional<CheckKind> parse_check_kind(std::string_view s) { return lookup<CheckKind>(kCheckNames, s); }

std::string_view to_string(TaskKind k) { return kTaskKindNames.at(static_cast<std::size_t>(k)); }
std::optional<TaskKind> parse_task_kind(std::string_view s) { return lookup<TaskKind>(kTaskKindNames, s); }

std::string_view to_string(ExecutorHint h) { return kHintNames.at(static_cast<std::size_t>(h)); }
std::optional<ExecutorHint> parse_executor_hint(std::string_view s) {
  if (s == "stevei") return ExecutorHint::default_;
  if (s == "mcu_craft") return ExecutorHint::craft_station;
  return lookup<ExecutorHint>(kHintNames, s);
}

std::string_view to_string(Mode m) { return kModeNames.at(static_cast<std::size_t>(m)); }
std::optional<Mode> parse_mode(std::string_view s) { return lookup<Mode>(kModeNames, s); }

std::string_view to_string(FailureReason r) { return kReasonNames.at(static_cast<std::size_t>(r)); }
std::optional<FailureReason> parse_failure_reason(std::string_view s) {
  return lookup<FailureReason>(kReasonNames, s);
}

int priority(FailureReason r) {
  switch (r) {
    case FailureReason::env_terminated: return 0;
    case FailureReason::risk_abort: return 1;
    case FailureReason::action_invalid: return 2;
    case FailureReason::tool_missing: return 3;
    case FailureReason::gui_blocked: return 4;
    case FailureReason::nav_stuck: return 5;
    case FailureReason::nav_oscillate: return 6;
    case FailureReason::path_unreachable: return 7;
    case FailureReason::monitor_never_true: return 8;
    case FailureReason::timeout: return 9;
    case FailureReason::unknown: return 10;
  }
  return 10;
}

const std::array<FailureReason, kFailureReasonCount>& all_failure_reasons() {
  static const std::array<FailureReason, kFailureReasonCount> all = [] {
    std::array<FailureReason, kFailureReasonCount> a{};
    for (int i = 0; i < kFailureReasonCount; ++i) a[i] = static_cast<FailureReason>(i);
    return a;
  }();
  return all;
}

bool StateDiff::empty() const {
  return inventory.empty() && displacement == Vec3{} && gui_before == gui_after && world_time_delta == 0;
}

void check_invariants(const StateSnapshot& s) {
  if (s.gui_open != (s.gui_state == GuiState::open))
    throw ContractViolation("snapshot: gui_open disagrees with gui_state");
  for (const auto& [item, n] : s.inventory)
    if (n < 0) throw ContractViolation("snapshot: negative inventory count for " + item);
  if (!(s.coords_variance >= 0.0)) throw ContractViolation("snapshot: negative coords_variance");
  if (s.gui_events.open_count < 0 || s.gui_events.close_count < 0)
    throw ContractViolation("snapshot: negative gui event count");
  if (s.world_time < 0) throw ContractViolation("snapshot: negative world_time");
  if (s.health < 0.0 || s.health > 20.0) throw ContractViolation("snapshot: health out of range");
  if (s.hunger < 0.0 || s.hunger > 20.0) throw ContractViolation("snapshot: hunger out of range");
  if (!s.coords.finite() || !s.coords_start.finite()) throw ContractViolation("snapshot: non-finite coords");
}

DiagnosisRecord DiagnosisRecord::make(bool outcome, StateDiff diff, std::optional<FailureReason> reason,
                                      const Indicators& indicators, std::vector<std::string> missing) {
  DiagnosisRecord d;
  d.outcome = outcome;
  d.state_diff = std::move(diff);
  d.failure_reason = reason;
  d.indicators = indicators;
  d.missing = std::move(missing);
  d.check();
  return d;
}

void DiagnosisRecord::check() const {
  if (outcome && failure_reason)
    throw ContractViolation("diagnosis: successful outcome carries a failure reason");
  if (!outcome && !failure_reason) throw ContractViolation("diagnosis: failed outcome without a failure reason");
  for (double v : indicators)
    if (!std::isfinite(v)) throw ContractViolation("diagnosis: non-finite indicator");
}

void check_invariants(const ExperienceTuple& e) {
  check_invariants(e.s_pre);
  check_invariants(e.s_post);
  e.diagnosis.check();
  if (e.s_pre.world_time > e.s_post.world_time) throw ContractViolation("tuple: s_pre is later than s_post");
  InvDelta expected;
  std::set<std::string> keys;
  for (const auto& [k, _] : e.s_pre.inventory) keys.insert(k);
  for (const auto& [k, _] : e.s_post.inventory) keys.insert(k);
  for (const auto& k : keys) {
    auto get = [&](const Inventory& inv) {
      auto it = inv.find(k);
      return it == inv.end() ? 0 : it->second;
    };
    const int d = get(e.s_post.inventory) - get(e.s_pre.inventory);
    if (d != 0) expected[k] = d;
  }
  if (expected != e.diagnosis.state_diff.inventory)
    throw ContractViolation("tuple: diagnosis inventory delta disagrees with snapshots");
}

}  // namespace evo
