#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "evo/error.hpp"
#include "evo/model/plan.hpp"
#include "evo/planner/planner.hpp"

namespace evo {

json EndpointConfig::to_json() const {
  return {{"url", url},         {"model", model},         {"api_key_env", api_key_env},
          {"temperature", temperature}, {"timeout_s", timeout_s}, {"retries", retries}};
}

EndpointConfig EndpointConfig::from_json(const json& j) {
  EndpointConfig c;
  c.url = j.value("url", c.url);
  c.model = j.value("model", c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.temperature = j.value("temperature", c.temperature);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  c.retries = j.value("retries", c.retries);
  if (c.retries < 0 || c.timeout_s < 1) throw ConfigError("endpoint retries must be >= 0 and timeout >= 1");
  return c;
}

std::optional<std::string> extract_json_object(const std::string& text) {
  for (std::size_t start = text.find('{'); start != std::string::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_str = false, esc = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_str) {
        if (esc) esc = false;
        else if (c == '\\') esc = true;
        else if (c == '"') in_str = false;
        continue;
      }
      if (c == '"') in_str = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        std::string candidate = text.substr(start, i - start + 1);
        if (json::accept(candidate)) return candidate;
        break;
      }
    }
  }
  return std::nullopt;
}

ExternalPlanner::ExternalPlanner(EndpointConfig cfg, TemplateSet templates)
    : cfg_(std::move(cfg)), templates_(std::move(templates)) {}

std::string ExternalPlanner::complete(const json& messages) const {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.url, m, url_re)) throw ConfigError("bad endpoint url: " + cfg_.url);
  const std::string base = m[1];
  const std::string path = m[2].matched ? std::string(m[2]) : "/";

  httplib::Client cli(base);
  cli.set_connection_timeout(cfg_.timeout_s);
  cli.set_read_timeout(cfg_.timeout_s);
  httplib::Headers headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);
  const json body = {{"model", cfg_.model}, {"messages", messages}, {"temperature", cfg_.temperature}};
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransportError("chat request to " + cfg_.url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status));
  try {
    const json reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected chat response shape: ") + e.what());
  }
}

PlanSpec ExternalPlanner::plan(const PlannerRequest& req) {
  const PromptDocument doc = render_planner_prompt(req, templates_);
  json messages = doc.messages();
  std::string last;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    last = complete(messages);
    std::string problem;
    if (auto obj = extract_json_object(last)) {
      try {
        return validate_plan_text(*obj);
      } catch (const SchemaError& e) {
        problem = e.what();
      }
    } else {
      problem = "no JSON object found in the reply";
    }
    messages.push_back({{"role", "assistant"}, {"content", last}});
    messages.push_back({{"role", "user"},
                        {"content", "The plan was rejected: " + problem + ". Send a corrected plan object only."}});
  }
  throw PlannerError("planner reply failed validation " + std::to_string(cfg_.retries + 1) + " times", last);
}

}  // namespace evo
