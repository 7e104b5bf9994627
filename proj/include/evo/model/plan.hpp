#pragma once

#include <string_view>

#include "evo/model/json_io.hpp"
#include "evo/model/types.hpp"

namespace evo {

inline constexpr int kMaxConditionTokens = 6;

// Validates a parsed plan document and returns the typed plan. Throws
// SchemaError naming the offending field. Unknown enum values, unknown item
// names, duplicate subgoal ids, non-positive timeouts and over-long
// conditions are rejected rather than repaired.
PlanSpec validate_plan(const json& raw);
PlanSpec validate_plan_text(std::string_view text);

// Validates a single check; `path` prefixes the field name in errors.
// With strict=false the item registry and condition length are not enforced;
// used when reloading stored documents.
CheckSpec validate_check(const json& raw, const std::string& path, bool strict = true);
SubgoalSpec validate_subgoal(const json& raw, const std::string& path, bool strict = true);

json serialize_plan(const PlanSpec& plan);

// Inventory delta (zero entries omitted), displacement, gui transition and
// world-time delta between two snapshots of the same episode.
StateDiff compute_state_diff(const StateSnapshot& pre, const StateSnapshot& post);

// post - pre per item, zero entries omitted.
InvDelta inventory_delta(const Inventory& pre, const Inventory& post);

int count_tokens(std::string_view text);

}  // namespace evo
