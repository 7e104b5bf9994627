#pragma once

// Canonical JSON encoding of the domain types. nlohmann::json objects keep
// keys in a std::map, so dump() output has alphabetical key order and is
// byte-reproducible for equal values.

#include <json.hpp>

#include "evo/model/types.hpp"

namespace evo {

using json = nlohmann::json;

void to_json(json& j, const Vec3& v);
void from_json(const json& j, Vec3& v);

void to_json(json& j, const StateSnapshot& s);
void from_json(const json& j, StateSnapshot& s);

void to_json(json& j, const CheckSpec& c);
void to_json(json& j, const SubgoalSpec& s);
void to_json(json& j, const PlanSpec& p);

void to_json(json& j, const StateDiff& d);
void from_json(const json& j, StateDiff& d);

void to_json(json& j, const DiagnosisRecord& d);
void from_json(const json& j, DiagnosisRecord& d);

void to_json(json& j, const ExperienceTuple& e);
void from_json(const json& j, ExperienceTuple& e);

// Single-line canonical encoding.
std::string canonical(const json& j);

// 64-bit FNV-1a; used for content hashes and checksums across the project.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace evo
