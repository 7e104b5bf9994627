#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evo/distill/knowledge.hpp"
#include "evo/model/json_io.hpp"
#include "evo/model/types.hpp"
#include "evo/store/store.hpp"

namespace evo {

struct PendingSubgoal {
  TaskKind task_kind = TaskKind::mine;
  std::string condition;
  friend bool operator==(const PendingSubgoal&, const PendingSubgoal&) = default;
};

struct RecallContext {
  std::string goal;
  std::string zone;
  std::optional<std::string> held;
  std::vector<PendingSubgoal> pending;
  Vec3 coords;
  Inventory inventory;
  std::string scope;  // task group; empty means every scope

  void check() const;
};

struct RecallConfig {
  double alpha = 0.7;
  double beta = 0.3;
  int k = 8;
  double summary_floor = 0.2;
  int dim = 256;
  double cell_size = 16.0;

  void check() const;
  json to_json() const;
  static RecallConfig from_json(const json& j);
};

struct CapsuleItem {
  std::string key;
  std::string value;
  std::string source;  // doc id or "diagnosis"
  friend bool operator==(const CapsuleItem&, const CapsuleItem&) = default;
};

struct MemoryCapsule {
  std::vector<CapsuleItem> facts;
  std::vector<CapsuleItem> constraints;
  std::vector<std::string> next_actions;
  std::vector<std::string> supporting_skills;
  std::vector<std::string> supporting_failures;
  std::vector<std::string> selected;  // ids of the top-K memory block, best first

  bool empty() const { return facts.empty() && constraints.empty() && next_actions.empty(); }
  json to_json() const;
  friend bool operator==(const MemoryCapsule&, const MemoryCapsule&) = default;
};

std::string render_context(const RecallContext& ctx);
std::string render_entry(const IndexEntry& e);
std::string render_summary(const SummaryRecord& s);

// First pending subgoal, else the template subgoal producing the goal item.
std::uint64_t context_signature(const RecallContext& ctx);

double score(const RecallContext& ctx, const IndexEntry& e, const RecallConfig& cfg = {});
double score(const RecallContext& ctx, const SummaryRecord& s, const RecallConfig& cfg = {});

struct ScoredItem {
  std::string id;
  double score = 0.0;
  std::int64_t timestamp = 0;
  bool summary = false;
};

// Higher score, then later timestamp, then smaller id.
bool ranks_before(const ScoredItem& a, const ScoredItem& b);

// Top-K over summaries and live index entries.
std::vector<ScoredItem> select_topk(const RecallContext& ctx, const ExperienceStore& store, const RecallConfig& cfg);

MatchContext match_context(const RecallContext& ctx);

MemoryCapsule recall_topk(const RecallContext& ctx, const ExperienceStore& store, const KnowledgeBase& kb,
                          const RecallConfig& cfg = {});

}  // namespace evo
