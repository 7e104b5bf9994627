#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evo {

using Inventory = std::map<std::string, int>;
using InvDelta = std::map<std::string, int>;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

enum class GuiState { closed, open };

struct GuiEvents {
  int open_count = 0;
  int close_count = 0;
  friend bool operator==(const GuiEvents&, const GuiEvents&) = default;
};

// Structured state read at attempt boundaries. The windowed fields
// (coords_start, coords_variance, inv_delta, gui_events, crafted_items)
// cover the span since the last attempt mark.
struct StateSnapshot {
  std::string episode_id;
  Vec3 coords_start;
  Vec3 coords;
  double coords_variance = 0.0;
  Inventory inventory;
  InvDelta inv_delta;
  bool gui_open = false;
  GuiState gui_state = GuiState::closed;
  GuiEvents gui_events;
  std::int64_t world_time = 0;
  double furnace_burn = 0.0;
  double furnace_cook = 0.0;
  int container_items = 0;
  std::vector<std::string> crafted_items;
  std::string selected_item;
  double health = 20.0;
  double hunger = 20.0;

  friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

// Throws ContractViolation naming the first broken invariant.
void check_invariants(const StateSnapshot& s);

enum class CheckKind {
  inv_ge,
  inv_delta_ge,
  equipped_is,
  coord_near,
  coord_moved_ge,
  gui_is_open,
  gui_is_closed,
  gui_events_ge,
  world_time_ge,
  furnace_burn_active,
  furnace_cook_ge,
  container_count_ge,
  crafted_contains,
};

inline constexpr int kCheckKindCount = 13;

std::string_view to_string(CheckKind k);
std::optional<CheckKind> parse_check_kind(std::string_view s);

struct CheckSpec {
  CheckKind kind = CheckKind::inv_ge;
  std::optional<std::string> item;
  std::optional<std::int64_t> n;
  std::optional<Vec3> target;
  std::optional<double> radius;

  friend bool operator==(const CheckSpec&, const CheckSpec&) = default;
};

enum class TaskKind { mine, craft, use, combat, wait };
enum class ExecutorHint { default_, craft_station, wait };
enum class Mode { move, stay };

std::string_view to_string(TaskKind k);
std::optional<TaskKind> parse_task_kind(std::string_view s);
std::string_view to_string(ExecutorHint h);
// Also accepts the legacy names "stevei" and "mcu_craft".
std::optional<ExecutorHint> parse_executor_hint(std::string_view s);
std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

struct SubgoalSpec {
  std::string subgoal_id;
  std::string condition;
  int timeout_s = 60;
  TaskKind task_kind = TaskKind::mine;
  ExecutorHint executor_hint = ExecutorHint::default_;
  Mode mode = Mode::move;
  std::vector<CheckSpec> checks;

  friend bool operator==(const SubgoalSpec&, const SubgoalSpec&) = default;
};

struct PlanSpec {
  std::string plan_id;
  std::vector<SubgoalSpec> subgoals;
  std::vector<std::string> global_constraints;

  friend bool operator==(const PlanSpec&, const PlanSpec&) = default;
};

enum class FailureReason {
  nav_stuck,
  nav_oscillate,
  path_unreachable,
  gui_blocked,
  monitor_never_true,
  tool_missing,
  timeout,
  env_terminated,
  action_invalid,
  risk_abort,
  unknown,
};

inline constexpr int kFailureReasonCount = 11;

std::string_view to_string(FailureReason r);
std::optional<FailureReason> parse_failure_reason(std::string_view s);
// Arbitration rank: lower wins when several reasons apply.
int priority(FailureReason r);
const std::array<FailureReason, kFailureReasonCount>& all_failure_reasons();

struct StateDiff {
  InvDelta inventory;
  Vec3 displacement;
  GuiState gui_before = GuiState::closed;
  GuiState gui_after = GuiState::closed;
  std::int64_t world_time_delta = 0;

  bool empty() const;
  friend bool operator==(const StateDiff&, const StateDiff&) = default;
};

// Indicator slots, in order.
enum Indicator : std::size_t {
  kCoordVariance = 0,
  kInvChangeL1 = 1,
  kGuiOpens = 2,
  kGuiCloses = 3,
  kNetDisplacement = 4,
  kHealthDelta = 5,
};
inline constexpr std::size_t kIndicatorDim = 6;
using Indicators = std::array<double, kIndicatorDim>;

struct DiagnosisRecord {
  bool outcome = false;
  StateDiff state_diff;
  std::optional<FailureReason> failure_reason;
  Indicators indicators{};
  // Requirements the executor reported absent (items or stations).
  std::vector<std::string> missing;

  // Validating constructor; throws ContractViolation when outcome and
  // failure_reason disagree or an indicator is not finite.
  static DiagnosisRecord make(bool outcome, StateDiff diff, std::optional<FailureReason> reason,
                              const Indicators& indicators, std::vector<std::string> missing = {});
  void check() const;

  friend bool operator==(const DiagnosisRecord&, const DiagnosisRecord&) = default;
};

struct ExperienceTuple {
  std::string doc_id;
  StateSnapshot s_pre;
  SubgoalSpec action;
  DiagnosisRecord diagnosis;
  StateSnapshot s_post;
  std::string episode_id;
  std::int64_t attempt_index = 0;

  friend bool operator==(const ExperienceTuple&, const ExperienceTuple&) = default;
};

void check_invariants(const ExperienceTuple& e);

}  // namespace evo
