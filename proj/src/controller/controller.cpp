#include "evo/controller/controller.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "evo/distill/templates.hpp"
#include "evo/error.hpp"
#include "evo/model/plan.hpp"
#include "evo/recall/encoder.hpp"

namespace evo {

void TaskSpec::check() const {
  if (task_id.empty()) throw ConfigError("task_id is empty");
  if (goal.empty()) throw ConfigError("task " + task_id + ": goal is empty");
  if (success_checks.empty()) throw ConfigError("task " + task_id + ": success_checks is empty");
  if (step_budget <= 0) throw ConfigError("task " + task_id + ": step_budget must be positive");
}

void to_json(json& j, const TaskSpec& t) {
  j = json{{"task_id", t.task_id},
           {"group", t.group},
           {"goal", t.goal},
           {"init_commands", t.init_commands},
           {"success_checks", t.success_checks},
           {"step_budget", t.step_budget}};
}

void from_json(const json& j, TaskSpec& t) {
  t.task_id = j.at("task_id").get<std::string>();
  t.group = j.value("group", "");
  t.goal = j.at("goal").get<std::string>();
  t.init_commands = j.value("init_commands", std::vector<std::string>{});
  t.success_checks.clear();
  const auto& checks = j.at("success_checks");
  for (std::size_t i = 0; i < checks.size(); ++i)
    t.success_checks.push_back(validate_check(checks[i], "success_checks[" + std::to_string(i) + "]"));
  t.step_budget = j.value("step_budget", 6000);
  t.check();
}

std::vector<std::string> Ablations::names() const {
  std::vector<std::string> out;
  if (no_guard_distill) out.push_back("no_guard_distill");
  if (no_knowledge_visibility) out.push_back("no_knowledge_visibility");
  if (no_skill_distill) out.push_back("no_skill_distill");
  if (planning_only) out.push_back("planning_only");
  return out;
}

Ablations Ablations::from_names(const std::vector<std::string>& names) {
  Ablations a;
  for (const auto& n : names) {
    if (n == "no_skill_distill") a.no_skill_distill = true;
    else if (n == "no_guard_distill") a.no_guard_distill = true;
    else if (n == "no_knowledge_visibility") a.no_knowledge_visibility = true;
    else if (n == "planning_only") a.planning_only = true;
    else if (n != "none" && !n.empty()) throw ConfigError("unknown ablation '" + n + "'");
  }
  return a;
}

void ControllerConfig::check() const {
  if (k_tol < 1) throw ConfigError("k_tol must be >= 1");
  if (replan_budget < 0) throw ConfigError("replan_budget must be >= 0");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (episode_step_budget < 1) throw ConfigError("episode_step_budget must be >= 1");
  if (!(risk_health_drop > 0)) throw ConfigError("risk_health_drop must be positive");
  if (retreat_steps < 0) throw ConfigError("retreat_steps must be >= 0");
  if (monitor_hold_steps < 1) throw ConfigError("monitor_hold_steps must be >= 1");
  if (!(cell_size > 0)) throw ConfigError("cell_size must be positive");
  stagnation.check();
  recall.check();
}

json ControllerConfig::to_json() const {
  return json{{"k_tol", k_tol},
              {"replan_budget", replan_budget},
              {"warmup_steps", warmup_steps},
              {"episode_step_budget", episode_step_budget},
              {"risk_health_drop", risk_health_drop},
              {"retreat_steps", retreat_steps},
              {"monitor_hold_steps", monitor_hold_steps},
              {"cell_size", cell_size},
              {"window_k", stagnation.window_k},
              {"eps_nav", stagnation.eps_nav},
              {"eps_inv", stagnation.eps_inv},
              {"oscillation_net_disp", stagnation.oscillation_net_disp},
              {"gui_cycles", stagnation.gui_cycles},
              {"still_step", stagnation.still_step},
              {"still_fraction", stagnation.still_fraction},
              {"recall", recall.to_json()},
              {"ablations", ablations.names()},
              {"freeze_kb", freeze_kb}};
}

ControllerConfig ControllerConfig::from_json(const json& j) {
  ControllerConfig c;
  c.k_tol = j.value("k_tol", c.k_tol);
  c.replan_budget = j.value("replan_budget", c.replan_budget);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.episode_step_budget = j.value("episode_step_budget", c.episode_step_budget);
  c.risk_health_drop = j.value("risk_health_drop", c.risk_health_drop);
  c.retreat_steps = j.value("retreat_steps", c.retreat_steps);
  c.monitor_hold_steps = j.value("monitor_hold_steps", c.monitor_hold_steps);
  c.cell_size = j.value("cell_size", c.cell_size);
  c.stagnation.window_k = j.value("window_k", c.stagnation.window_k);
  c.stagnation.eps_nav = j.value("eps_nav", c.stagnation.eps_nav);
  c.stagnation.eps_inv = j.value("eps_inv", c.stagnation.eps_inv);
  c.stagnation.oscillation_net_disp = j.value("oscillation_net_disp", c.stagnation.oscillation_net_disp);
  c.stagnation.gui_cycles = j.value("gui_cycles", c.stagnation.gui_cycles);
  c.stagnation.still_step = j.value("still_step", c.stagnation.still_step);
  c.stagnation.still_fraction = j.value("still_fraction", c.stagnation.still_fraction);
  if (j.contains("recall")) c.recall = RecallConfig::from_json(j.at("recall"));
  if (j.contains("ablations")) c.ablations = Ablations::from_names(j.at("ablations").get<std::vector<std::string>>());
  c.freeze_kb = j.value("freeze_kb", c.freeze_kb);
  c.check();
  return c;
}

AttemptRecord execute_subgoal(const SubgoalSpec& sg, sim::World& env, ExperienceStore& store,
                              const ControllerConfig& cfg, const ExecConstraints& constraints,
                              const std::string& episode_id, std::int64_t attempt_index, int step_cap,
                              Executor* executor) {
  std::unique_ptr<Executor> owned;
  if (!executor) {
    owned = make_executor(sg, constraints);
    executor = owned.get();
  }
  int budget = std::max(1, sg.timeout_s * sim::kTicksPerSecond);
  if (step_cap > 0) budget = std::min(budget, step_cap);

  env.mark_attempt();
  const StateSnapshot pre = env.snapshot();
  const Monitor monitor = compile_checks(sg.checks);
  const double h0 = env.health();
  const std::int64_t t0 = env.tick();
  AttemptTrace trace;
  trace.steps.push_back(env.trace_step());
  AttemptOutcome out;
  int steps = 0;
  int held = 0;

  auto take = [&](const sim::StepResult& r) {
    ++steps;
    trace.steps.push_back(env.trace_step());
    if (r.status == sim::StepStatus::rejected_malformed) trace.action_rejected = true;
    if (r.terminated || env.terminated()) trace.env_terminated = true;
  };

  if (env.terminated()) {
    take(env.step(sim::Action::noop()));
  } else if (monitor(pre)) {
    take(env.step(sim::Action::noop()));
    out.monitor_result = out.monitor_ever_true = monitor(env.snapshot());
  } else {
    while (steps < budget) {
      Decision d = executor->next(env);
      if (d.kind == Decision::Kind::done) break;
      if (d.kind == Decision::Kind::missing) {
        trace.tool_missing = true;
        trace.missing = d.missing;
        take(env.step(sim::Action::noop()));
        break;
      }
      take(d.raw.empty() ? env.step(d.action) : env.step(d.raw));
      if (trace.env_terminated || trace.action_rejected) break;
      const bool holds = monitor(env.snapshot());
      out.monitor_ever_true = out.monitor_ever_true || holds;
      held = holds ? held + 1 : 0;
      if (held >= cfg.monitor_hold_steps) {
        out.monitor_result = true;
        break;
      }
      if (h0 - env.health() >= cfg.risk_health_drop) {
        trace.risk_abort = true;
        break;
      }
    }
    out.timed_out = !out.monitor_result && steps >= budget;
  }

  const StateSnapshot post = env.snapshot();
  ExperienceTuple e;
  e.episode_id = episode_id;
  e.attempt_index = attempt_index;
  e.s_pre = pre;
  e.s_post = post;
  e.action = sg;
  e.diagnosis = diagnose(pre, post, sg, trace, out, cfg.stagnation);
  e.doc_id = store.append(e);

  AttemptRecord rec;
  rec.subgoal = sg;
  rec.tuple = std::move(e);
  rec.steps_used = steps;
  rec.wall_ticks = static_cast<int>(std::max<std::int64_t>(1, env.tick() - t0));
  rec.risk_abort = trace.risk_abort;
  return rec;
}

bool should_replan(const std::vector<bool>& outcomes, int k_tol) {
  if (k_tol < 1) throw ConfigError("k_tol must be >= 1");
  int streak = 0;
  for (auto it = outcomes.rbegin(); it != outcomes.rend() && !*it; ++it) ++streak;
  return streak >= k_tol;
}

bool should_replan(const std::vector<AttemptRecord>& recent, int k_tol) {
  std::vector<bool> o;
  for (const auto& r : recent) o.push_back(r.ok());
  return should_replan(o, k_tol);
}

PlanSpec splice_plan(const PlanSpec& plan, std::size_t failed_index, const PlanSpec& tail) {
  if (failed_index > plan.subgoals.size()) throw ContractViolation("splice_plan: failed_index out of range");
  PlanSpec out;
  out.plan_id = tail.plan_id;
  out.subgoals.assign(plan.subgoals.begin(), plan.subgoals.begin() + static_cast<std::ptrdiff_t>(failed_index));
  for (auto sg : tail.subgoals) {
    char id[16];
    std::snprintf(id, sizeof id, "sg_%03zu", out.subgoals.size() + 1);
    sg.subgoal_id = id;
    out.subgoals.push_back(std::move(sg));
  }
  std::set<std::string> merged(plan.global_constraints.begin(), plan.global_constraints.end());
  merged.insert(tail.global_constraints.begin(), tail.global_constraints.end());
  out.global_constraints.assign(merged.begin(), merged.end());
  return out;
}

std::vector<Guardrail> planning_guardrails(const KnowledgeBase& kb, const std::string& goal, const std::string& scope,
                                           const Inventory& available, const std::vector<Guardrail>& local) {
  MatchContext m;
  m.goal = goal;
  m.task_kinds = {TaskKind::mine, TaskKind::craft, TaskKind::use, TaskKind::combat, TaskKind::wait};
  m.available = available;
  if (auto g = parse_goal(goal)) {
    std::vector<std::string> items = all_prerequisites(g->item);
    items.push_back(g->item);
    for (const auto& it : items) m.cond_sigs.push_back(condition_hash(subgoal_for(it, 1)));
  }
  std::vector<Guardrail> out;
  for (auto& g : match_guardrails(kb, m))
    if (scope.empty() || g.scopes.empty() || g.scopes.count(scope) || g.scopes.count("global")) out.push_back(g);
  for (const auto& g : local)
    if (std::none_of(out.begin(), out.end(), [&](const Guardrail& o) { return o.signature() == g.signature(); }))
      out.push_back(g);
  return out;
}

RecallContext recall_context(const std::string& goal, const sim::World& env, const std::vector<SubgoalSpec>& pending,
                             const std::string& scope, double cell_size) {
  RecallContext ctx;
  ctx.goal = goal;
  ctx.coords = env.agent().vec();
  ctx.zone = zone_label(ctx.coords, cell_size);
  if (!env.selected_item().empty()) ctx.held = env.selected_item();
  for (const auto& sg : pending) ctx.pending.push_back({sg.task_kind, sg.condition});
  ctx.inventory = env.inventory();
  ctx.scope = scope;
  return ctx;
}

ReplanResult local_replan(const PlanSpec& plan, std::size_t failed_index, const std::optional<Guardrail>& new_guard,
                          bool commit, PlannerRequest base, const RecallContext& ctx, Planner& planner,
                          KnowledgeBase& kb, const ExperienceStore& store, const ControllerConfig& cfg,
                          const std::string& scope, std::vector<Guardrail>& local_guards) {
  ReplanResult res;
  if (new_guard) {
    if (commit) res.committed_guard = kb.commit(*new_guard, scope).id;
    else local_guards.push_back(*new_guard);
  }
  const bool visible = !cfg.ablations.no_knowledge_visibility;
  base.mode = PlanMode::replan;
  base.remaining_goal = base.goal;
  base.completed.assign(plan.subgoals.begin(), plan.subgoals.begin() + static_cast<std::ptrdiff_t>(failed_index));
  base.capsule = visible ? recall_topk(ctx, store, kb, cfg.recall) : MemoryCapsule{};
  base.guardrails = planning_guardrails(visible ? kb : KnowledgeBase{}, base.goal, scope, base.state.inventory,
                                        local_guards);
  if (!visible) base.skills.clear();
  res.plan = splice_plan(plan, failed_index, planner.plan(base));
  return res;
}

std::string_view to_string(EpisodeFailure f) {
  switch (f) {
    case EpisodeFailure::task_timeout: return "task_timeout";
    case EpisodeFailure::deadlock: return "deadlock";
    case EpisodeFailure::env_terminated: return "env_terminated";
  }
  return "unknown";
}

json EpisodeResult::to_json() const {
  json j{{"episode_id", episode_id},
         {"task_id", task_id},
         {"seed", seed},
         {"success", success},
         {"subgoal_outcomes", subgoal_outcomes},
         {"replans", replans},
         {"failure_kind", failure_kind ? json(std::string(evo::to_string(*failure_kind))) : json(nullptr)},
         {"distilled", distilled},
         {"attempts", attempts},
         {"steps", steps}};
  return j;
}

void EpisodeResult::write_event_log(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  for (const auto& e : events) out << e.dump() << '\n';
}

namespace {

int retreat(sim::World& env, int max_steps) {
  int steps = 0;
  while (steps < max_steps && !env.terminated() && env.hazardous(env.agent())) {
    if (env.gui() != sim::GuiKind::closed) {
      env.step(sim::Action{sim::ActionType::close_gui, {}});
      ++steps;
      continue;
    }
    const nav::Reach r = nav::reach(env, false);
    auto safe = nav::nearest_safe(env, r);
    if (!safe) break;
    auto a = nav::step_toward(env, r, *safe);
    if (!a) break;
    env.step(*a);
    ++steps;
  }
  return steps;
}

bool task_done(const TaskSpec& task, const sim::World& env) {
  const StateSnapshot s = env.snapshot();
  return std::all_of(task.success_checks.begin(), task.success_checks.end(),
                     [&](const CheckSpec& c) { return evaluate_check(c, s); });
}

}  // namespace

EpisodeResult run_episode(const TaskSpec& task, std::uint64_t seed, Planner& planner, KnowledgeBase& kb,
                          ExperienceStore& store, const ControllerConfig& cfg, const std::string& episode_id,
                          const EpisodeHooks& hooks, sim::World* world) {
  task.check();
  cfg.check();
  sim::World local_world;
  sim::World& env = world ? *world : local_world;
  const Ablations& ab = cfg.ablations;
  const bool planning_only = ab.planning_only;
  const bool visible = !ab.no_knowledge_visibility && !planning_only;
  const bool may_commit = !cfg.freeze_kb && !planning_only;
  const int budget = task.step_budget > 0 ? task.step_budget : cfg.episode_step_budget;

  EpisodeResult res;
  res.episode_id = episode_id;
  res.task_id = task.task_id;
  res.seed = seed;
  auto event = [&](const std::string& kind, json body) {
    body["event"] = kind;
    body["step"] = res.steps;
    res.events.push_back(std::move(body));
  };
  auto fail = [&](EpisodeFailure f, const std::string& why) {
    res.failure_kind = f;
    event("episode_failed", {{"failure_kind", std::string(to_string(f))}, {"why", why}});
  };

  try {
    env.reset(seed, task.init_commands, episode_id);
  } catch (const ResetError& e) {
    fail(EpisodeFailure::env_terminated, std::string("reset: ") + e.what());
    return res;
  }
  for (int i = 0; i < cfg.warmup_steps && !env.terminated(); ++i) {
    env.step(sim::Action::noop());
    ++res.steps;
  }
  if (hooks.after_reset) hooks.after_reset(env);
  const Inventory initial_inventory = env.inventory();

  std::vector<Guardrail> local_guards;
  PlannerRequest req;
  req.goal = task.goal;
  req.task_id = task.task_id;
  req.seed = seed;
  req.init_commands = task.init_commands;
  req.state = env.snapshot();
  req.placed_stations = nav::reachable_stations(env);
  if (visible) {
    req.capsule = recall_topk(recall_context(task.goal, env, {}, task.group, cfg.cell_size), store, kb, cfg.recall);
    for (const Skill* s : kb.skills_in_scope(task.group)) req.skills.push_back(*s);
    req.guardrails = planning_guardrails(kb, task.goal, task.group, req.state.inventory);
  }
  const std::vector<Skill> visible_skills = req.skills;

  PlanSpec plan;
  try {
    plan = planner.plan(req);
  } catch (const Error& e) {
    fail(EpisodeFailure::deadlock, std::string("planner: ") + e.what());
    return res;
  }
  event("plan", {{"plan", plan}, {"guardrails", req.guardrails.size()}, {"skills", req.skills.size()}});

  std::size_t idx = 0;
  std::vector<AttemptRecord> streak;
  std::vector<ExperienceTuple> episode_tuples;

  auto replan = [&](const std::string& why) -> bool {
    if (planning_only || res.replans >= cfg.replan_budget) {
      fail(EpisodeFailure::deadlock, why);
      return false;
    }
    std::optional<Guardrail> guard;
    if (!streak.empty()) {
      std::vector<ExperienceTuple> tuples;
      for (const auto& r : streak) tuples.push_back(r.tuple);
      guard = distill_subgoal_guardrail(tuples, static_cast<int>(tuples.size()), cfg.cell_size);
    }
    PlannerRequest base = req;
    base.state = env.snapshot();
    base.placed_stations = nav::reachable_stations(env);
    base.skills = visible_skills;
    std::vector<SubgoalSpec> pending(plan.subgoals.begin() + static_cast<std::ptrdiff_t>(idx), plan.subgoals.end());
    const RecallContext ctx = recall_context(task.goal, env, pending, task.group, cfg.cell_size);
    try {
      const bool commit = may_commit && !ab.no_guard_distill;
      ReplanResult rr = local_replan(plan, idx, guard, commit, base, ctx, planner, kb, store, cfg, task.group,
                                     local_guards);
      if (rr.committed_guard) res.distilled.push_back(*rr.committed_guard);
      plan = rr.plan;
    } catch (const Error& e) {
      fail(EpisodeFailure::deadlock, std::string("replan: ") + e.what());
      return false;
    }
    ++res.replans;
    streak.clear();
    event("replan", {{"why", why}, {"plan", plan}, {"from_index", idx}, {"guard", guard ? guard->guard_id : ""}});
    return true;
  };

  while (true) {
    if (task_done(task, env)) {
      res.success = true;
      break;
    }
    if (res.steps >= budget) {
      fail(EpisodeFailure::task_timeout, "step budget exhausted");
      break;
    }
    if (idx >= plan.subgoals.size()) {
      if (!replan("plan exhausted before the task checks held")) break;
      continue;
    }
    const SubgoalSpec& sg = plan.subgoals[idx];
    const ExecConstraints constraints = ExecConstraints::from_plan(plan.global_constraints, cfg.cell_size);
    std::unique_ptr<Executor> custom = hooks.executor ? hooks.executor(sg, constraints) : nullptr;
    AttemptRecord rec = execute_subgoal(sg, env, store, cfg, constraints, episode_id, res.attempts, budget - res.steps,
                                        custom.get());
    ++res.attempts;
    res.steps += rec.steps_used;
    res.subgoal_outcomes.push_back(rec.ok());
    episode_tuples.push_back(rec.tuple);
    const auto& d = rec.tuple.diagnosis;
    event("attempt", {{"subgoal_id", sg.subgoal_id},
                      {"condition", sg.condition},
                      {"doc_id", rec.tuple.doc_id},
                      {"outcome", d.outcome},
                      {"failure_reason", d.failure_reason ? json(std::string(to_string(*d.failure_reason))) : json()},
                      {"steps", rec.steps_used}});
    if (rec.risk_abort) res.steps += retreat(env, cfg.retreat_steps);
    if (env.terminated()) {
      fail(EpisodeFailure::env_terminated, "environment terminated");
      break;
    }
    if (rec.ok()) {
      ++idx;
      streak.clear();
      continue;
    }
    streak.push_back(std::move(rec));
    if (planning_only) {
      fail(EpisodeFailure::deadlock, "attempt failed without recovery");
      break;
    }
    if (should_replan(streak, cfg.k_tol) && !replan("failure streak on " + sg.subgoal_id)) break;
  }

  if (res.success) event("episode_succeeded", json::object());

  if (may_commit) {
    try {
      if (res.success && !ab.no_skill_distill) {
        std::vector<ExperienceTuple> covering;
        for (const auto& e : episode_tuples)
          if (e.diagnosis.outcome) covering.push_back(e);
        if (!covering.empty()) {
          const auto c = kb.commit(distill_skill(covering, task.goal), task.group);
          res.distilled.push_back(c.id);
          event("commit", {{"kind", "skill"}, {"id", c.id}, {"inserted", c.inserted}});
        }
      }
      if (!res.success && !ab.no_guard_distill) {
        if (!streak.empty()) {
          std::vector<ExperienceTuple> tuples;
          for (const auto& r : streak) tuples.push_back(r.tuple);
          if (auto g = distill_subgoal_guardrail(tuples, cfg.k_tol, cfg.cell_size)) {
            const auto c = kb.commit(*g, task.group);
            res.distilled.push_back(c.id);
            event("commit", {{"kind", "subgoal_guardrail"}, {"id", c.id}, {"inserted", c.inserted}});
          }
        }
        if (auto g = distill_task_guardrail(episode_tuples, task.goal, plan, env.recipes(), initial_inventory)) {
          const auto c = kb.commit(*g, task.group);
          res.distilled.push_back(c.id);
          event("commit", {{"kind", "task_guardrail"}, {"id", c.id}, {"inserted", c.inserted}});
        }
      }
    } catch (const Error& e) {
      event("distill_error", {{"what", e.what()}});
    }
  }
  return res;
}

ReplayResult replay_skill(const Skill& skill, sim::World& env, ExperienceStore& store, const ControllerConfig& cfg,
                          const std::string& episode_id) {
  cfg.check();
  ReplayResult out;
  const Monitor pre = compile_checks(skill.preconditions);
  out.preconditions_met = pre(env.snapshot());
  if (!out.preconditions_met) return out;
  std::int64_t index = 0;
  ExecConstraints constraints;
  constraints.cell_size = cfg.cell_size;
  for (const auto& sg : skill.steps) {
    bool ok = false;
    for (int k = 0; k < cfg.k_tol && !ok && !env.terminated(); ++k) {
      out.attempts.push_back(execute_subgoal(sg, env, store, cfg, constraints, episode_id, index++));
      const auto& rec = out.attempts.back();
      out.steps += rec.steps_used;
      ok = rec.ok();
      if (rec.risk_abort) {
        out.steps += retreat(env, cfg.retreat_steps);
        constraints.avoid_hazard = true;
      }
    }
    if (!ok) break;
  }
  out.success = compile_checks(skill.success_checks)(env.snapshot());
  return out;
}

}  // namespace evo
