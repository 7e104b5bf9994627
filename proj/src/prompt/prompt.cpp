#include "evo/prompt/prompt.hpp"

#include <fstream>
#include <sstream>

#include "evo/error.hpp"

namespace evo {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();
}

bool Card::has(const std::string& name) const {
  for (const auto& [n, t] : blocks)
    if (n == name) return true;
  return false;
}

const std::string& Card::block(const std::string& name) const {
  for (const auto& [n, t] : blocks)
    if (n == name) return t;
  throw NotFound("template block '" + name + "'");
}

Card parse_card(const std::string& text) {
  Card c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("@@ ", 0) == 0) {
      c.blocks.emplace_back(line.substr(3), std::string());
      continue;
    }
    if (c.blocks.empty()) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ContractViolation("template text before the first block: '" + line + "'");
    }
    c.blocks.back().second += line + "\n";
  }
  for (auto& [n, t] : c.blocks)
    while (!t.empty() && t.back() == '\n') t.pop_back();
  return c;
}

std::string fill(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = text.find("}}", open);
    if (close == std::string::npos) break;
    out.append(text, pos, open - pos);
    const std::string key = text.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it == values.end()) throw ContractViolation("no value for template key '" + key + "'");
    out += it->second;
    pos = close + 2;
  }
  out.append(text, pos);
  return out;
}

void TemplateSet::add(const std::string& name, std::string text) {
  cards_[name] = parse_card(text);
  raw_[name] = std::move(text);
}

const TemplateSet& TemplateSet::embedded() {
  static const TemplateSet set = [] {
    TemplateSet s;
    for (const auto& [name, text] : detail::embedded_templates()) s.add(name, text);
    return s;
  }();
  return set;
}

TemplateSet TemplateSet::with_overrides(const std::filesystem::path& dir) {
  TemplateSet s = embedded();
  if (!std::filesystem::is_directory(dir)) throw ConfigError("template directory not found: " + dir.string());
  for (const auto& [name, text] : embedded().raw_) {
    const auto path = dir / (name + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    s.add(name, ss.str());
  }
  return s;
}

const Card& TemplateSet::card(const std::string& name) const {
  auto it = cards_.find(name);
  if (it == cards_.end()) throw NotFound("template '" + name + "'");
  return it->second;
}

const std::string& TemplateSet::text(const std::string& name) const {
  auto it = raw_.find(name);
  if (it == raw_.end()) throw NotFound("template '" + name + "'");
  return it->second;
}

json TemplateSet::checksums() const {
  json j = json::object();
  for (const auto& [name, text] : raw_) j[name] = hex64(fnv1a64(text));
  return j;
}

json PromptDocument::messages() const {
  return json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}});
}

}  // namespace evo
