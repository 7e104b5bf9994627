#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evo/model/json_io.hpp"

namespace evo {

// A card is a sequence of named text blocks introduced by "@@ name" lines.
struct Card {
  std::vector<std::pair<std::string, std::string>> blocks;

  bool has(const std::string& name) const;
  const std::string& block(const std::string& name) const;  // throws NotFound
};

Card parse_card(const std::string& text);

// Replaces every {{key}}; throws ContractViolation on a key without a value.
std::string fill(const std::string& text, const std::map<std::string, std::string>& values);

class TemplateSet {
 public:
  // Cards compiled into the library.
  static const TemplateSet& embedded();
  // Embedded cards with any <name>.txt found in `dir` taking precedence.
  static TemplateSet with_overrides(const std::filesystem::path& dir);

  const Card& card(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  // fnv1a64 of each card's raw text, as hex.
  json checksums() const;

 private:
  std::map<std::string, std::string> raw_;
  std::map<std::string, Card> cards_;
  void add(const std::string& name, std::string text);
};

struct PromptDocument {
  std::string system;
  std::string user;

  json messages() const;
  friend bool operator==(const PromptDocument&, const PromptDocument&) = default;
};

}  // namespace evo
