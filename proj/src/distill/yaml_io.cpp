#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

#include "evo/distill/knowledge.hpp"
#include "evo/distill/templates.hpp"
#include "evo/error.hpp"
#include "evo/harness/yaml_json.hpp"
#include "evo/model/plan.hpp"
#include "evo/recall/encoder.hpp"

namespace evo {

namespace fs = std::filesystem;

std::string render_check(const CheckSpec& c) {
  std::ostringstream out;
  out << to_string(c.kind);
  if (c.item) out << ' ' << *c.item;
  if (c.target) out << ' ' << c.target->x << ' ' << c.target->y << ' ' << c.target->z;
  if (c.radius) out << " r=" << *c.radius;
  if (c.n) out << ' ' << *c.n;
  return out.str();
}

std::optional<CheckSpec> parse_check_text(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  auto k = parse_check_kind(kind);
  if (!k) return std::nullopt;
  json j{{"type", kind}};
  std::vector<std::string> rest;
  for (std::string t; in >> t;) rest.push_back(t);
  std::vector<double> nums;
  for (const auto& t : rest) {
    if (t.rfind("r=", 0) == 0) {
      j["radius"] = std::stod(t.substr(2));
    } else if (sim::is_item(t)) {
      j["item"] = t;
    } else {
      try {
        nums.push_back(std::stod(t));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
  }
  if (*k == CheckKind::coord_near && nums.size() >= 3) {
    j["target"] = {nums[0], nums[1], nums[2]};
    nums.erase(nums.begin(), nums.begin() + 3);
  }
  if (!nums.empty()) j["n"] = static_cast<std::int64_t>(nums.back());
  try {
    return validate_check(j, "check");
  } catch (const SchemaError&) {
    return std::nullopt;
  }
}

std::string render_guardrail(const Guardrail& g) {
  std::string out;
  if (g.level == GuardLevel::subgoal) {
    out = "do not plan '" + g.forbid.value_or("") + "'";
    if (g.trigger.spatial_cell) out += " in cell " + hex64(*g.trigger.spatial_cell).substr(0, 8);
  } else {
    out = "for goals matching '" + g.trigger.goal_pattern.value_or("*") + "' first";
    for (std::size_t i = 0; i < g.require.size(); ++i) out += (i ? ", '" : " '") + g.require[i].condition + "'";
  }
  if (!g.trigger.lacking.empty()) {
    out += " while lacking";
    for (const auto& m : g.trigger.lacking) out += " " + m;
  }
  if (g.consequence_reason) out += " [" + std::string(to_string(*g.consequence_reason)) + "]";
  return out;
}

namespace {

void emit_json(YAML::Emitter& out, const json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (const auto& [k, v] : j.items()) {
      out << YAML::Key << k << YAML::Value;
      emit_json(out, v);
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    out << YAML::BeginSeq;
    for (const auto& v : j) emit_json(out, v);
    out << YAML::EndSeq;
  } else if (j.is_string()) {
    out << YAML::DoubleQuoted << j.get<std::string>();
  } else if (j.is_boolean()) {
    out << j.get<bool>();
  } else if (j.is_number_integer()) {
    out << j.get<std::int64_t>();
  } else if (j.is_number()) {
    out << YAML::Precision(17) << j.get<double>();
  } else {
    out << YAML::Null;
  }
}

json node_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Map: {
      json j = json::object();
      for (const auto& kv : n) j[kv.first.as<std::string>()] = node_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      json j = json::array();
      for (const auto& v : n) j.push_back(node_to_json(v));
      return j;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = n.Scalar();
      if (n.Tag() == "!") return s;  // quoted
      if (s == "true") return true;
      if (s == "false") return false;
      try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos == s.size()) return v;
      } catch (const std::exception&) {
      }
      try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
      } catch (const std::exception&) {
      }
      return s;
    }
    default: return nullptr;
  }
}

std::vector<std::string> string_list(const YAML::Node& n, const char* field) {
  std::vector<std::string> out;
  if (!n) return out;
  if (!n.IsSequence()) throw SchemaError(field, "expected a list");
  for (const auto& v : n) out.push_back(v.as<std::string>());
  return out;
}

SubgoalSpec step_from_text(const std::string& text, std::size_t i) {
  SubgoalSpec sg;
  if (auto g = parse_goal(text)) sg = subgoal_for(g->item, g->count);
  auto toks = tokenize(text);
  if (!toks.empty()) {
    if (toks[0] == "craft") sg.task_kind = TaskKind::craft;
    else if (toks[0] == "smelt" || toks[0] == "use" || toks[0] == "open" || toks[0] == "place") sg.task_kind = TaskKind::use;
    else if (toks[0] == "wait") sg.task_kind = TaskKind::wait;
    else if (toks[0] == "attack" || toks[0] == "fight") sg.task_kind = TaskKind::combat;
    else sg.task_kind = TaskKind::mine;
  }
  if (count_tokens(text) > kMaxConditionTokens) throw SchemaError("steps", "step '" + text + "' longer than 6 tokens");
  sg.condition = text;
  char buf[16];
  std::snprintf(buf, sizeof buf, "sg_%03zu", i + 1);
  sg.subgoal_id = buf;
  return sg;
}

}  // namespace

std::string skills_to_yaml(const std::vector<Skill>& skills) {
  YAML::Emitter out;
  out << YAML::BeginSeq;
  for (const auto& s : skills) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    out << YAML::Key << "goal" << YAML::Value << s.goal;
    out << YAML::Key << "preconditions" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& c : s.preconditions) out << render_check(c);
    out << YAML::EndSeq;
    out << YAML::Key << "steps" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& st : s.steps) out << st.condition;
    out << YAML::EndSeq;
    out << YAML::Key << "checks" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& c : s.success_checks) out << render_check(c);
    out << YAML::EndSeq;
    out << YAML::Key << "failure_modes" << YAML::Value << YAML::Flow << YAML::BeginSeq << YAML::EndSeq;
    out << YAML::Key << "structured" << YAML::Value;
    emit_json(out, json(s));
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  return std::string(out.c_str()) + "\n";
}

std::string failures_to_yaml(const std::vector<Guardrail>& guards) {
  YAML::Emitter out;
  out << YAML::BeginSeq;
  for (const auto& g : guards) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << g.guard_id;
    out << YAML::Key << "symptom" << YAML::Value << g.consequence;
    std::string cause = g.consequence_reason ? std::string(to_string(*g.consequence_reason)) : "deadlock";
    for (const auto& m : g.trigger.lacking) cause += ", missing " + m;
    out << YAML::Key << "root_cause" << YAML::Value << cause;
    out << YAML::Key << "guardrail" << YAML::Value << YAML::Flow << YAML::BeginSeq << render_guardrail(g)
        << YAML::EndSeq;
    out << YAML::Key << "recovery" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    if (g.level == GuardLevel::task) {
      for (const auto& r : g.require) out << r.condition;
    } else if (g.trigger.spatial_cell) {
      out << "pick a target outside the blocked cell";
    } else if (!g.trigger.lacking.empty()) {
      for (const auto& m : g.trigger.lacking) out << "obtain " + m + " first";
    } else {
      out << "replan around '" + g.forbid.value_or("") + "'";
    }
    out << YAML::EndSeq;
    out << YAML::Key << "structured" << YAML::Value;
    emit_json(out, json(g));
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  return std::string(out.c_str()) + "\n";
}

std::vector<Skill> skills_from_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw SchemaError("skills", std::string("invalid YAML: ") + e.what());
  }
  std::vector<YAML::Node> entries;
  if (root.IsMap()) entries.push_back(root);
  else if (root.IsSequence())
    for (const auto& n : root) entries.push_back(n);
  std::vector<Skill> out;
  for (const auto& n : entries) {
    if (n["structured"]) {
      out.push_back(node_to_json(n["structured"]).get<Skill>());
      continue;
    }
    Skill s;
    if (!n["name"] || !n["goal"]) throw SchemaError("skills", "entry needs name and goal");
    s.name = n["name"].as<std::string>();
    s.goal = n["goal"].as<std::string>();
    auto steps = string_list(n["steps"], "steps");
    for (std::size_t i = 0; i < steps.size(); ++i) s.steps.push_back(step_from_text(steps[i], i));
    for (const auto& t : string_list(n["checks"], "checks"))
      if (auto c = parse_check_text(t)) s.success_checks.push_back(*c);
    for (const auto& t : string_list(n["preconditions"], "preconditions"))
      if (auto c = parse_check_text(t)) s.preconditions.push_back(*c);
      else s.effect_predicates.push_back("requires: " + t);
    if (s.success_checks.empty() && !s.steps.empty()) s.success_checks = s.steps.back().checks;
    s.check();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Guardrail> failures_from_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw SchemaError("failures", std::string("invalid YAML: ") + e.what());
  }
  if (!root.IsSequence()) return {};
  std::vector<Guardrail> out;
  for (const auto& n : root) {
    if (!n["structured"])
      throw SchemaError("failures.structured", "failure entries need a structured trigger to be executable");
    out.push_back(node_to_json(n["structured"]).get<Guardrail>());
  }
  return out;
}

void KnowledgeBase::save(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create " + dir.string());
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + (dir / name).string());
    out << content;
  };
  write("knowledge.json", to_json().dump(2) + "\n");
  write("skills.yaml", skills_to_yaml(skills_));
  write("failures.yaml", failures_to_yaml(guardrails_));
}

KnowledgeBase KnowledgeBase::load(const fs::path& dir) {
  const auto path = dir / "knowledge.json";
  if (fs::exists(path)) {
    std::ifstream in(path);
    return from_json(json::parse(in));
  }
  KnowledgeBase kb;
  auto read = [&](const char* name) {
    std::ifstream in(dir / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  if (fs::exists(dir / "skills.yaml"))
    for (auto& s : skills_from_yaml(read("skills.yaml"))) kb.commit(std::move(s), "");
  if (fs::exists(dir / "failures.yaml"))
    for (auto& g : failures_from_yaml(read("failures.yaml"))) kb.commit(std::move(g), "");
  return kb;
}

json yaml_to_json(const std::string& text) {
  try {
    return node_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("yaml: ") + e.what());
  }
}

json parse_config_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded()) return j;
  return yaml_to_json(text);
}

}  // namespace evo
