#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evo/model/json_io.hpp"
#include "evo/model/types.hpp"

namespace evo {

struct IndexEntry {
  std::string doc_id;
  std::uint64_t cond_sig = 0;
  std::uint64_t spatial_cell = 0;
  std::set<std::string> tags;
  std::int64_t timestamp = 0;
  bool outcome = false;
  std::optional<FailureReason> failure_reason;
  std::vector<std::pair<std::string, int>> inv_delta_brief;  // top 3 by |delta|
  // Carried for rendering and summaries.
  std::string task_kind;
  std::string condition;
  Vec3 coords;
  std::string episode_id;
  bool rolled_up = false;

  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

struct SummaryRecord {
  std::string summary_id;
  std::int64_t first_timestamp = 0;
  std::int64_t last_timestamp = 0;
  std::string first_doc_id;
  std::string last_doc_id;
  int doc_count = 0;
  int success_count = 0;
  double success_rate = 0.0;
  std::map<std::string, int> reason_histogram;
  std::map<std::string, int> tag_histogram;
  Vec3 bbox_min;
  Vec3 bbox_max;
  InvDelta net_inv_delta;
  std::vector<std::uint64_t> top_cond_sigs;  // up to 5, most frequent first

  friend bool operator==(const SummaryRecord&, const SummaryRecord&) = default;
};

void to_json(json& j, const IndexEntry& e);
void from_json(const json& j, IndexEntry& e);
void to_json(json& j, const SummaryRecord& s);
void from_json(const json& j, SummaryRecord& s);

struct QueryFilter {
  std::optional<std::uint64_t> cond_sig;
  std::optional<std::uint64_t> spatial_cell;
  std::vector<std::string> tags;  // all must be present
  std::optional<bool> outcome;
  std::optional<FailureReason> reason;
  std::optional<std::pair<std::int64_t, std::int64_t>> time_range;  // inclusive
  bool include_rolled_up = false;

  bool any() const;
  bool matches(const IndexEntry& e) const;
};

struct StoreConfig {
  int rollup_window = 256;
  bool auto_rollup = true;
  double cell_size = 16.0;

  json to_json() const;
};

IndexEntry build_index_entry(const ExperienceTuple& e, std::int64_t timestamp, double cell_size = 16.0);

// Three-tier experience store: documents (append-only), index entries and
// rolled-up summaries. Backed by a directory of JSONL files or held in
// memory. One writer, many readers.
class ExperienceStore {
 public:
  static std::unique_ptr<ExperienceStore> open(const std::filesystem::path& dir, StoreConfig cfg = {});
  static std::unique_ptr<ExperienceStore> in_memory(StoreConfig cfg = {});
  ~ExperienceStore();
  ExperienceStore(const ExperienceStore&) = delete;
  ExperienceStore& operator=(const ExperienceStore&) = delete;

  // Assigns doc_id and timestamp, persists, and rolls up when the live index
  // exceeds the window (if auto_rollup).
  std::string append(ExperienceTuple e);

  std::vector<IndexEntry> query(const QueryFilter& filter, std::size_t limit) const;
  // Summarizes the oldest live entries in batches of w/2 until at most w
  // remain; empty when live size <= w.
  std::vector<SummaryRecord> rollup(int w);
  ExperienceTuple get_document(const std::string& doc_id) const;
  std::optional<IndexEntry> get_entry(const std::string& doc_id) const;

  std::vector<IndexEntry> live_entries() const;
  std::vector<IndexEntry> all_entries() const;
  std::vector<SummaryRecord> summaries() const;
  std::vector<ExperienceTuple> documents() const;
  std::size_t size() const;
  std::size_t live_size() const;
  std::string next_doc_id() const;
  const StoreConfig& config() const;
  std::optional<std::filesystem::path> directory() const;

 private:
  struct Impl;
  explicit ExperienceStore(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

std::string format_doc_id(std::int64_t n);

}  // namespace evo
