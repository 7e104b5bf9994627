#include "evo/model/json_io.hpp"

#include <cstdio>

#include "evo/error.hpp"
#include "evo/model/plan.hpp"

namespace evo {

namespace {

std::string_view gui_name(GuiState g) { return g == GuiState::open ? "open" : "closed"; }

GuiState parse_gui(const json& j, const char* field) {
  const auto s = j.get<std::string>();
  if (s == "open") return GuiState::open;
  if (s == "closed") return GuiState::closed;
  throw SchemaError(field, "expected open|closed");
}

}  // namespace

void to_json(json& j, const Vec3& v) { j = json::array({v.x, v.y, v.z}); }

void from_json(const json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3) throw SchemaError("coords", "expected [x,y,z]");
  v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void to_json(json& j, const StateSnapshot& s) {
  j = json{
      {"container_items", s.container_items},
      {"coords", s.coords},
      {"coords_start", s.coords_start},
      {"coords_variance", s.coords_variance},
      {"crafted_items", s.crafted_items},
      {"episode_id", s.episode_id},
      {"furnace_burn", s.furnace_burn},
      {"furnace_cook", s.furnace_cook},
      {"gui_events", json{{"close", s.gui_events.close_count}, {"open", s.gui_events.open_count}}},
      {"gui_open", s.gui_open},
      {"gui_state", gui_name(s.gui_state)},
      {"health", s.health},
      {"hunger", s.hunger},
      {"inv_delta", s.inv_delta},
      {"inventory", s.inventory},
      {"selected_item", s.selected_item},
      {"world_time", s.world_time},
  };
}

void from_json(const json& j, StateSnapshot& s) {
  s.container_items = j.at("container_items").get<int>();
  s.coords = j.at("coords").get<Vec3>();
  s.coords_start = j.at("coords_start").get<Vec3>();
  s.coords_variance = j.at("coords_variance").get<double>();
  s.crafted_items = j.at("crafted_items").get<std::vector<std::string>>();
  s.episode_id = j.at("episode_id").get<std::string>();
  s.furnace_burn = j.at("furnace_burn").get<double>();
  s.furnace_cook = j.at("furnace_cook").get<double>();
  s.gui_events.close_count = j.at("gui_events").at("close").get<int>();
  s.gui_events.open_count = j.at("gui_events").at("open").get<int>();
  s.gui_open = j.at("gui_open").get<bool>();
  s.gui_state = parse_gui(j.at("gui_state"), "gui_state");
  s.health = j.at("health").get<double>();
  s.hunger = j.at("hunger").get<double>();
  s.inv_delta = j.at("inv_delta").get<InvDelta>();
  s.inventory = j.at("inventory").get<Inventory>();
  s.selected_item = j.at("selected_item").get<std::string>();
  s.world_time = j.at("world_time").get<std::int64_t>();
}

void to_json(json& j, const CheckSpec& c) {
  j = json{{"type", to_string(c.kind)}};
  if (c.item) j["item"] = *c.item;
  if (c.n) j["n"] = *c.n;
  if (c.target) j["target"] = *c.target;
  if (c.radius) j["radius"] = *c.radius;
}

void to_json(json& j, const SubgoalSpec& s) {
  json checks = json::array();
  for (const auto& c : s.checks) checks.push_back(c);
  j = json{
      {"checks", checks},
      {"condition", s.condition},
      {"executor_hint", to_string(s.executor_hint)},
      {"mode", to_string(s.mode)},
      {"subgoal_id", s.subgoal_id},
      {"task_kind", to_string(s.task_kind)},
      {"timeout_s", s.timeout_s},
  };
}

void to_json(json& j, const PlanSpec& p) { j = serialize_plan(p); }

void to_json(json& j, const StateDiff& d) {
  j = json{
      {"displacement", d.displacement},
      {"gui_after", gui_name(d.gui_after)},
      {"gui_before", gui_name(d.gui_before)},
      {"inventory", d.inventory},
      {"world_time_delta", d.world_time_delta},
  };
}

void from_json(const json& j, StateDiff& d) {
  d.displacement = j.at("displacement").get<Vec3>();
  d.gui_after = parse_gui(j.at("gui_after"), "gui_after");
  d.gui_before = parse_gui(j.at("gui_before"), "gui_before");
  d.inventory = j.at("inventory").get<InvDelta>();
  d.world_time_delta = j.at("world_time_delta").get<std::int64_t>();
}

void to_json(json& j, const DiagnosisRecord& d) {
  j = json{
      {"failure_reason", d.failure_reason ? json(to_string(*d.failure_reason)) : json(nullptr)},
      {"indicators", d.indicators},
      {"missing", d.missing},
      {"outcome", d.outcome},
      {"state_diff", d.state_diff},
  };
}

void from_json(const json& j, DiagnosisRecord& d) {
  std::optional<FailureReason> reason;
  if (!j.at("failure_reason").is_null()) {
    reason = parse_failure_reason(j.at("failure_reason").get<std::string>());
    if (!reason) throw SchemaError("failure_reason", "unknown failure reason");
  }
  d = DiagnosisRecord::make(j.at("outcome").get<bool>(), j.at("state_diff").get<StateDiff>(), reason,
                            j.at("indicators").get<Indicators>(), j.at("missing").get<std::vector<std::string>>());
}

void to_json(json& j, const ExperienceTuple& e) {
  j = json{
      {"action", e.action},
      {"attempt_index", e.attempt_index},
      {"diagnosis", e.diagnosis},
      {"doc_id", e.doc_id},
      {"episode_id", e.episode_id},
      {"s_post", e.s_post},
      {"s_pre", e.s_pre},
  };
}

void from_json(const json& j, ExperienceTuple& e) {
  e.action = validate_subgoal(j.at("action"), "action", /*strict=*/false);
  e.attempt_index = j.at("attempt_index").get<std::int64_t>();
  e.diagnosis = j.at("diagnosis").get<DiagnosisRecord>();
  e.doc_id = j.at("doc_id").get<std::string>();
  e.episode_id = j.at("episode_id").get<std::string>();
  e.s_post = j.at("s_post").get<StateSnapshot>();
  e.s_pre = j.at("s_pre").get<StateSnapshot>();
}

std::string canonical(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace evo
