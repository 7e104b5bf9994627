#pragma once

#include <string>

#include "evo/model/json_io.hpp"

namespace evo {

// Parses a JSON document, or YAML when the text is not JSON.
json parse_config_text(const std::string& text);
json yaml_to_json(const std::string& text);

}  // namespace evo
