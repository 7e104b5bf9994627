#include "evo/recall/recall.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "evo/diagnosis/diagnosis.hpp"
#include "evo/distill/templates.hpp"
#include "evo/error.hpp"
#include "evo/recall/encoder.hpp"

namespace evo {

void RecallContext::check() const {
  if (goal.empty()) throw ContractViolation("recall context needs a goal");
}

void RecallConfig::check() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("recall weights must be nonnegative");
  if (k < 1) throw ConfigError("recall budget k must be positive");
  if (dim < 1) throw ConfigError("encoder dimension must be positive");
  if (!(cell_size > 0.0)) throw ConfigError("cell size must be positive");
  if (!std::isfinite(summary_floor)) throw ConfigError("summary floor must be finite");
}

json RecallConfig::to_json() const {
  return {{"alpha", alpha}, {"beta", beta}, {"k", k}, {"summary_floor", summary_floor}, {"dim", dim},
          {"cell_size", cell_size}};
}

RecallConfig RecallConfig::from_json(const json& j) {
  RecallConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.k = j.value("k", c.k);
  c.summary_floor = j.value("summary_floor", c.summary_floor);
  c.dim = j.value("dim", c.dim);
  c.cell_size = j.value("cell_size", c.cell_size);
  c.check();
  return c;
}

namespace {

json items_json(const std::vector<CapsuleItem>& items) {
  json arr = json::array();
  for (const auto& i : items) arr.push_back({{"key", i.key}, {"value", i.value}, {"source", i.source}});
  return arr;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_coords(const Vec3& v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.0f,%.0f,%.0f)", v.x, v.y, v.z);
  return buf;
}

std::string fmt_delta(const std::vector<std::pair<std::string, int>>& d) {
  std::string s;
  for (const auto& [item, n] : d) {
    if (!s.empty()) s += ' ';
    s += item + (n >= 0 ? "+" : "") + std::to_string(n);
  }
  return s;
}

}  // namespace

json MemoryCapsule::to_json() const {
  return {{"facts", items_json(facts)},
          {"constraints", items_json(constraints)},
          {"next_actions", next_actions},
          {"supporting_skills", supporting_skills},
          {"supporting_failures", supporting_failures},
          {"selected", selected}};
}

std::string render_context(const RecallContext& ctx) {
  std::string s = ctx.goal;
  for (const auto& p : ctx.pending) s += " " + std::string(to_string(p.task_kind)) + " " + p.condition;
  if (ctx.held) s += " " + *ctx.held;
  if (!ctx.zone.empty()) s += " " + ctx.zone;
  return s;
}

std::string render_entry(const IndexEntry& e) {
  std::string s = e.task_kind + " " + e.condition;
  if (e.failure_reason) s += " " + std::string(to_string(*e.failure_reason));
  for (const auto& t : e.tags) s += " " + t;
  for (const auto& [item, n] : e.inv_delta_brief) s += " " + item;
  return s;
}

std::string render_summary(const SummaryRecord& s) {
  std::string out;
  for (const auto& [tag, n] : s.tag_histogram) out += tag + " ";
  for (const auto& [reason, n] : s.reason_histogram) out += reason + " ";
  for (const auto& [item, n] : s.net_inv_delta) out += item + " ";
  if (!out.empty()) out.pop_back();
  return out;
}

std::uint64_t context_signature(const RecallContext& ctx) {
  if (!ctx.pending.empty()) return condition_hash(ctx.pending.front().task_kind, ctx.pending.front().condition);
  if (auto g = parse_goal(ctx.goal)) {
    try {
      return condition_hash(subgoal_for(g->item, 1));
    } catch (const Error&) {
    }
  }
  return condition_hash(TaskKind::mine, ctx.goal);
}

namespace {

struct Prepared {
  BucketCounts counts;
  std::uint64_t sig;
};

Prepared prepare(const RecallContext& ctx, const RecallConfig& cfg) {
  return {encode_counts(render_context(ctx), cfg.dim), context_signature(ctx)};
}

double psi(const Prepared& p, const std::string& text, bool match, const RecallConfig& cfg) {
  return cfg.alpha * cosine_counts(p.counts, encode_counts(text, cfg.dim)) + cfg.beta * (match ? 1.0 : 0.0);
}

double psi_entry(const Prepared& p, const IndexEntry& e, const RecallConfig& cfg) {
  return psi(p, render_entry(e), e.cond_sig == p.sig, cfg);
}

double psi_summary(const Prepared& p, const SummaryRecord& s, const RecallConfig& cfg) {
  const bool match = std::find(s.top_cond_sigs.begin(), s.top_cond_sigs.end(), p.sig) != s.top_cond_sigs.end();
  return psi(p, render_summary(s), match, cfg);
}

void keep_top(std::vector<ScoredItem>& v, std::size_t k) {
  const auto n = std::min(k, v.size());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), v.end(), ranks_before);
  v.resize(n);
}

}  // namespace

double score(const RecallContext& ctx, const IndexEntry& e, const RecallConfig& cfg) {
  return psi_entry(prepare(ctx, cfg), e, cfg);
}

double score(const RecallContext& ctx, const SummaryRecord& s, const RecallConfig& cfg) {
  return psi_summary(prepare(ctx, cfg), s, cfg);
}

bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
  return a.id < b.id;
}

std::vector<ScoredItem> select_topk(const RecallContext& ctx, const ExperienceStore& store, const RecallConfig& cfg) {
  ctx.check();
  cfg.check();
  const Prepared p = prepare(ctx, cfg);
  const auto k = static_cast<std::size_t>(cfg.k);

  // Stage 1: coarse pass over summaries.
  std::vector<ScoredItem> candidates, pruned;
  for (const auto& s : store.summaries()) {
    ScoredItem it{s.summary_id, psi_summary(p, s, cfg), s.last_timestamp, true};
    (it.score >= cfg.summary_floor ? candidates : pruned).push_back(std::move(it));
  }
  // Stage 2: every live entry competes with the kept summaries.
  for (const auto& e : store.live_entries())
    candidates.push_back({e.doc_id, psi_entry(p, e, cfg), e.timestamp, false});
  keep_top(candidates, k);

  // Pruned summaries sit strictly below the floor; they only matter when the
  // current K-th item does not clear it.
  const bool settled = candidates.size() == k && candidates.back().score >= cfg.summary_floor;
  if (!settled && !pruned.empty()) {
    candidates.insert(candidates.end(), pruned.begin(), pruned.end());
    keep_top(candidates, k);
  }
  return candidates;
}

MatchContext match_context(const RecallContext& ctx) {
  MatchContext m;
  m.goal = ctx.goal;
  for (const auto& p : ctx.pending) {
    if (std::find(m.task_kinds.begin(), m.task_kinds.end(), p.task_kind) == m.task_kinds.end())
      m.task_kinds.push_back(p.task_kind);
    m.cond_sigs.push_back(condition_hash(p.task_kind, p.condition));
  }
  if (ctx.pending.empty()) {
    if (auto g = parse_goal(ctx.goal)) {
      try {
        const auto sg = subgoal_for(g->item, 1);
        m.task_kinds.push_back(sg.task_kind);
        m.cond_sigs.push_back(condition_hash(sg));
      } catch (const Error&) {
      }
    }
  }
  if (!ctx.zone.empty()) m.tags.insert(ctx.zone);
  m.available = ctx.inventory;
  return m;
}

namespace {

CapsuleItem entry_fact(const IndexEntry& e) {
  std::string value;
  if (e.outcome) {
    value = "succeeded";
  } else {
    value = "failed " + std::string(e.failure_reason ? to_string(*e.failure_reason) : "UNKNOWN");
  }
  value += " at " + fmt_coords(e.coords);
  if (!e.inv_delta_brief.empty()) value += " delta " + fmt_delta(e.inv_delta_brief);
  return {e.task_kind + ": " + e.condition, value, e.doc_id};
}

CapsuleItem summary_fact(const SummaryRecord& s) {
  std::string top_reason;
  int best = 0;
  for (const auto& [r, n] : s.reason_histogram)
    if (n > best) {
      best = n;
      top_reason = r;
    }
  std::string value = std::to_string(s.doc_count) + " attempts, success rate " + fmt(s.success_rate);
  if (!top_reason.empty()) value += ", mostly " + top_reason;
  value += ", region " + fmt_coords(s.bbox_min) + "-" + fmt_coords(s.bbox_max);
  return {"history " + s.first_doc_id + ".." + s.last_doc_id, value, s.last_doc_id};
}

CapsuleItem guard_constraint(const Guardrail& g) {
  std::string value;
  if (g.forbid) value = "avoid '" + *g.forbid + "'";
  for (const auto& r : g.require) {
    if (!value.empty()) value += "; ";
    value += "first " + std::string(to_string(r.task_kind)) + " '" + r.condition + "'";
  }
  if (!g.consequence.empty()) value += " (" + g.consequence + ")";
  const std::string source = g.provenance.empty() ? "diagnosis" : g.provenance.back();
  return {g.guard_id, value, source};
}

StateSnapshot inventory_state(const RecallContext& ctx) {
  StateSnapshot s;
  s.coords = ctx.coords;
  s.coords_start = ctx.coords;
  s.inventory = ctx.inventory;
  if (ctx.held) s.selected_item = *ctx.held;
  return s;
}

bool step_met(const SubgoalSpec& sg, const StateSnapshot& s) {
  bool any = false;
  for (const auto& c : sg.checks) {
    if (c.kind != CheckKind::inv_ge && c.kind != CheckKind::equipped_is) continue;
    any = true;
    if (!evaluate_check(c, s)) return false;
  }
  return any;
}

}  // namespace

MemoryCapsule recall_topk(const RecallContext& ctx, const ExperienceStore& store, const KnowledgeBase& kb,
                          const RecallConfig& cfg) {
  MemoryCapsule cap;
  const auto top = select_topk(ctx, store, cfg);
  const auto k = static_cast<std::size_t>(cfg.k);

  std::map<std::string, SummaryRecord> summaries;
  for (auto& s : store.summaries()) summaries.emplace(s.summary_id, std::move(s));
  for (const auto& item : top) {
    cap.selected.push_back(item.id);
    if (item.summary) cap.facts.push_back(summary_fact(summaries.at(item.id)));
    else if (auto e = store.get_entry(item.id)) cap.facts.push_back(entry_fact(*e));
  }

  const std::string scope = ctx.scope.empty() ? std::string() : ctx.scope;
  auto in_scope = [&](const std::set<std::string>& scopes) {
    return scope.empty() || scopes.contains(scope) || scopes.contains("global");
  };
  for (const auto& g : match_guardrails(kb, match_context(ctx))) {
    if (cap.constraints.size() >= k) break;
    if (!in_scope(g.scopes)) continue;
    cap.constraints.push_back(guard_constraint(g));
    cap.supporting_failures.push_back(g.guard_id);
  }

  // Skills ranked by the same score over their goal text.
  const Prepared p = prepare(ctx, cfg);
  std::vector<std::pair<double, const Skill*>> ranked;
  for (const auto& s : kb.skills()) {
    if (!in_scope(s.scopes)) continue;
    const bool match = std::any_of(s.steps.begin(), s.steps.end(),
                                   [&](const SubgoalSpec& sg) { return condition_hash(sg) == p.sig; });
    const double v = psi(p, s.goal + " " + s.name, match, cfg);
    if (v > 0.0) ranked.emplace_back(v, &s);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->name < b.second->name;
  });
  if (ranked.size() > k) ranked.resize(k);
  for (const auto& [v, s] : ranked) cap.supporting_skills.push_back(s->name);
  if (!ranked.empty()) {
    const auto state = inventory_state(ctx);
    for (const auto& step : ranked.front().second->steps) {
      if (step_met(step, state)) continue;
      cap.next_actions.push_back(std::string(to_string(step.task_kind)) + " " + step.condition);
      break;
    }
  }
  return cap;
}

}  // namespace evo
