#include "evo/distill/templates.hpp"

#include <algorithm>
#include <set>

#include "evo/recall/encoder.hpp"

namespace evo {

std::optional<Goal> parse_goal(std::string_view text) {
  auto toks = tokenize(text);
  if (toks.empty()) return std::nullopt;
  Goal g;
  std::size_t i = 0;
  if (!sim::is_item(toks[0]) && !std::all_of(toks[0].begin(), toks[0].end(), ::isdigit)) g.verb = toks[i++];
  if (i < toks.size() && std::all_of(toks[i].begin(), toks[i].end(), ::isdigit)) g.count = std::stoi(toks[i++]);
  std::string item;
  for (; i < toks.size(); ++i) item += (item.empty() ? "" : "_") + toks[i];
  if (!sim::is_item(item)) return std::nullopt;
  g.item = item;
  if (g.verb.empty()) {
    const auto& graph = sim::RecipeGraph::standard();
    const auto* r = graph.producer(item);
    g.verb = !r ? "mine" : r->station == sim::Station::furnace ? "smelt" : "craft";
  }
  return g;
}

std::string goal_text(const std::string& item) {
  const auto* r = sim::RecipeGraph::standard().producer(item);
  const char* verb = !r ? "mine" : r->station == sim::Station::furnace ? "smelt" : "craft";
  return std::string(verb) + " " + item;
}

namespace {

std::string words(std::string s) {
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

}  // namespace

SubgoalSpec subgoal_for(const std::string& item, int n, const sim::RecipeGraph& g) {
  SubgoalSpec sg;
  CheckSpec c;
  c.kind = CheckKind::inv_ge;
  c.item = item;
  c.n = std::max(1, n);
  sg.checks = {c};
  if (const auto* r = g.producer(item)) {
    if (r->station == sim::Station::furnace) {
      sg.condition = "smelt " + words(item);
      sg.task_kind = TaskKind::use;
      sg.executor_hint = ExecutorHint::craft_station;
      sg.timeout_s = 60;
    } else {
      sg.condition = "craft " + words(item);
      sg.task_kind = TaskKind::craft;
      sg.executor_hint = r->station == sim::Station::none ? ExecutorHint::default_ : ExecutorHint::craft_station;
      sg.timeout_s = 30;
    }
    sg.mode = Mode::stay;
  } else {
    auto src = g.source_block(item);
    sg.condition = "mine " + words(src ? std::string(sim::block_name(*src)) : item);
    sg.task_kind = TaskKind::mine;
    sg.timeout_s = 60;
    sg.mode = Mode::move;
  }
  sg.subgoal_id = "sg_001";
  return sg;
}

std::optional<std::string> produced_item(const SubgoalSpec& sg) {
  for (const auto& c : sg.checks)
    if (c.kind == CheckKind::inv_ge && c.item) return c.item;
  return std::nullopt;
}

std::vector<std::string> direct_prerequisites(const std::string& item, const sim::RecipeGraph& g) {
  std::vector<std::string> out;
  if (const auto* r = g.producer(item)) {
    if (r->station != sim::Station::none) out.push_back(sim::station_item(r->station));
    for (const auto& [in, n] : r->inputs) out.push_back(in);
    if (r->fuel) out.push_back(*r->fuel);
  } else if (auto src = g.source_block(item)) {
    auto rule = g.mining_rule(*src);
    if (rule.min_tier != sim::Tier::hand) out.push_back(sim::pickaxe_for(rule.min_tier));
  }
  std::vector<std::string> dedup;
  for (auto& x : out)
    if (std::find(dedup.begin(), dedup.end(), x) == dedup.end()) dedup.push_back(x);
  return dedup;
}

std::vector<std::string> all_prerequisites(const std::string& item, const sim::RecipeGraph& g) {
  std::vector<std::string> order;
  std::set<std::string> seen{item};
  std::vector<std::string> queue{item};
  for (std::size_t i = 0; i < queue.size(); ++i)
    for (const auto& p : direct_prerequisites(queue[i], g))
      if (seen.insert(p).second) {
        order.push_back(p);
        queue.push_back(p);
      }
  return order;
}

}  // namespace evo
