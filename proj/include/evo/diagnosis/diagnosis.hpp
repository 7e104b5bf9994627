#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "evo/model/types.hpp"

namespace evo {

struct TraceStep {
  Vec3 coords;
  Inventory inventory;
  bool gui_open = false;
  std::int64_t world_time = 0;
  double health = 20.0;
};

// Per-step samples of one subgoal attempt plus terminal flags reported by
// the executor and the environment.
struct AttemptTrace {
  std::vector<TraceStep> steps;
  bool env_terminated = false;
  bool action_rejected = false;
  bool risk_abort = false;
  bool tool_missing = false;
  std::vector<std::string> missing;

  void check() const;
};

struct StagnationConfig {
  int window_k = 20;
  double eps_nav = 0.25;
  int eps_inv = 0;
  double oscillation_net_disp = 2.0;
  int gui_cycles = 3;
  // A step counts as still when it moves less than still_step blocks;
  // the window is stuck when at least still_fraction of its steps are still.
  double still_step = 0.05;
  double still_fraction = 0.9;

  void check() const;
};

struct WindowStats {
  double variance = 0.0;      // mean of the per-axis population variances
  std::int64_t inv_l1 = 0;    // summed per-step L1 inventory change
  double net_displacement = 0.0;
  double still_fraction = 0.0;
};

using Monitor = std::function<bool(const StateSnapshot&)>;

bool evaluate_check(const CheckSpec& c, const StateSnapshot& s);
// Conjunction of all checks; the empty list is always true.
Monitor compile_checks(std::vector<CheckSpec> checks);

// Statistics of the window made of the k steps ending at index `end`
// (inclusive). nullopt when fewer than k steps are available.
std::optional<WindowStats> window_stats(const AttemptTrace& trace, int k, std::size_t end);
std::optional<WindowStats> final_window_stats(const AttemptTrace& trace, int k);

// nullopt when the trace is shorter than the window.
std::optional<bool> detect_stagnation(const AttemptTrace& trace, const StagnationConfig& cfg);

// Stagnation flag for every full window, element i for the window ending at
// step i + k - 1.
std::vector<bool> stagnation_profile(const AttemptTrace& trace, const StagnationConfig& cfg);

// Number of open -> close transitions in the trace.
int gui_cycles(const AttemptTrace& trace);

// `checks` are the subgoal's checks; a coord_near among them enables
// PATH_UNREACHABLE.
FailureReason classify_failure(const AttemptTrace& trace, bool monitor_ever_true, bool timed_out,
                               const StagnationConfig& cfg, const std::vector<CheckSpec>& checks = {});

struct AttemptOutcome {
  bool monitor_result = false;
  bool monitor_ever_true = false;
  bool timed_out = false;
};

DiagnosisRecord diagnose(const StateSnapshot& pre, const StateSnapshot& post, const SubgoalSpec& subgoal,
                         const AttemptTrace& trace, const AttemptOutcome& outcome, const StagnationConfig& cfg);

}  // namespace evo
