#include "evo/store/store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "evo/error.hpp"
#include "evo/model/plan.hpp"
#include "evo/recall/encoder.hpp"

namespace evo {

namespace fs = std::filesystem;

namespace {

std::uint64_t parse_hex(const json& j, const char* field) {
  if (!j.is_string()) throw SchemaError(field, "expected hex string");
  try {
    return std::stoull(j.get<std::string>(), nullptr, 16);
  } catch (const std::exception&) {
    throw SchemaError(field, "bad hex value");
  }
}

json reason_json(const std::optional<FailureReason>& r) { return r ? json(to_string(*r)) : json(nullptr); }

std::optional<FailureReason> reason_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  auto r = parse_failure_reason(j.get<std::string>());
  if (!r) throw SchemaError("failure_reason", "unknown value");
  return r;
}

}  // namespace

void to_json(json& j, const IndexEntry& e) {
  json brief = json::array();
  for (const auto& [item, n] : e.inv_delta_brief) brief.push_back({item, n});
  j = json{{"doc_id", e.doc_id},       {"cond_sig", hex64(e.cond_sig)},
           {"spatial_cell", hex64(e.spatial_cell)},
           {"tags", e.tags},           {"timestamp", e.timestamp},
           {"outcome", e.outcome},     {"failure_reason", reason_json(e.failure_reason)},
           {"inv_delta_brief", brief}, {"task_kind", e.task_kind},
           {"condition", e.condition}, {"coords", e.coords},
           {"episode_id", e.episode_id}, {"rolled_up", e.rolled_up}};
}

void from_json(const json& j, IndexEntry& e) {
  e.doc_id = j.at("doc_id").get<std::string>();
  e.cond_sig = parse_hex(j.at("cond_sig"), "cond_sig");
  e.spatial_cell = parse_hex(j.at("spatial_cell"), "spatial_cell");
  e.tags = j.at("tags").get<std::set<std::string>>();
  e.timestamp = j.at("timestamp").get<std::int64_t>();
  e.outcome = j.at("outcome").get<bool>();
  e.failure_reason = reason_from(j.at("failure_reason"));
  e.inv_delta_brief.clear();
  for (const auto& p : j.at("inv_delta_brief")) e.inv_delta_brief.emplace_back(p.at(0).get<std::string>(), p.at(1).get<int>());
  e.task_kind = j.at("task_kind").get<std::string>();
  e.condition = j.at("condition").get<std::string>();
  e.coords = j.at("coords").get<Vec3>();
  e.episode_id = j.at("episode_id").get<std::string>();
  e.rolled_up = j.value("rolled_up", false);
}

void to_json(json& j, const SummaryRecord& s) {
  json sigs = json::array();
  for (auto v : s.top_cond_sigs) sigs.push_back(hex64(v));
  j = json{{"summary_id", s.summary_id},
           {"window_span", {s.first_timestamp, s.last_timestamp}},
           {"first_doc_id", s.first_doc_id},
           {"last_doc_id", s.last_doc_id},
           {"doc_count", s.doc_count},
           {"success_count", s.success_count},
           {"success_rate", s.success_rate},
           {"reason_histogram", s.reason_histogram},
           {"tag_histogram", s.tag_histogram},
           {"spatial_bbox", {s.bbox_min, s.bbox_max}},
           {"net_inv_delta", s.net_inv_delta},
           {"top_cond_sigs", sigs}};
}

void from_json(const json& j, SummaryRecord& s) {
  s.summary_id = j.at("summary_id").get<std::string>();
  s.first_timestamp = j.at("window_span").at(0).get<std::int64_t>();
  s.last_timestamp = j.at("window_span").at(1).get<std::int64_t>();
  s.first_doc_id = j.at("first_doc_id").get<std::string>();
  s.last_doc_id = j.at("last_doc_id").get<std::string>();
  s.doc_count = j.at("doc_count").get<int>();
  s.success_count = j.at("success_count").get<int>();
  s.success_rate = j.at("success_rate").get<double>();
  s.reason_histogram = j.at("reason_histogram").get<std::map<std::string, int>>();
  s.tag_histogram = j.at("tag_histogram").get<std::map<std::string, int>>();
  s.bbox_min = j.at("spatial_bbox").at(0).get<Vec3>();
  s.bbox_max = j.at("spatial_bbox").at(1).get<Vec3>();
  s.net_inv_delta = j.at("net_inv_delta").get<InvDelta>();
  s.top_cond_sigs.clear();
  for (const auto& v : j.at("top_cond_sigs")) s.top_cond_sigs.push_back(parse_hex(v, "top_cond_sigs"));
}

bool QueryFilter::any() const {
  return cond_sig || spatial_cell || !tags.empty() || outcome || reason || time_range;
}

bool QueryFilter::matches(const IndexEntry& e) const {
  if (e.rolled_up && !include_rolled_up) return false;
  if (cond_sig && e.cond_sig != *cond_sig) return false;
  if (spatial_cell && e.spatial_cell != *spatial_cell) return false;
  for (const auto& t : tags)
    if (!e.tags.contains(t)) return false;
  if (outcome && e.outcome != *outcome) return false;
  if (reason && e.failure_reason != reason) return false;
  if (time_range && (e.timestamp < time_range->first || e.timestamp > time_range->second)) return false;
  return true;
}

json StoreConfig::to_json() const {
  return json{{"auto_rollup", auto_rollup}, {"cell_size", cell_size}, {"rollup_window", rollup_window}};
}

std::string format_doc_id(std::int64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "d_%06lld", static_cast<long long>(n));
  return buf;
}

IndexEntry build_index_entry(const ExperienceTuple& e, std::int64_t timestamp, double cell_size) {
  IndexEntry x;
  x.doc_id = e.doc_id;
  x.cond_sig = condition_hash(e.action);
  x.spatial_cell = spatial_hash(e.s_pre.coords, cell_size);
  x.tags.insert(std::string(to_string(e.action.task_kind)));
  for (const auto& c : e.action.checks)
    if (c.item) x.tags.insert(*c.item);
  x.tags.insert(zone_label(e.s_pre.coords, cell_size));
  x.timestamp = timestamp;
  x.outcome = e.diagnosis.outcome;
  x.failure_reason = e.diagnosis.failure_reason;
  std::vector<std::pair<std::string, int>> brief(e.diagnosis.state_diff.inventory.begin(),
                                                 e.diagnosis.state_diff.inventory.end());
  std::stable_sort(brief.begin(), brief.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
  if (brief.size() > 3) brief.resize(3);
  x.inv_delta_brief = std::move(brief);
  x.task_kind = std::string(to_string(e.action.task_kind));
  x.condition = e.action.condition;
  x.coords = e.s_pre.coords;
  x.episode_id = e.episode_id;
  return x;
}

namespace {

SummaryRecord summarize_impl(const std::vector<IndexEntry>& entries,
                             const std::function<const ExperienceTuple&(const std::string&)>& doc,
                             std::string summary_id) {
  if (entries.empty()) throw ContractViolation("summarize: no entries");
  SummaryRecord s;
  s.summary_id = std::move(summary_id);
  s.first_timestamp = entries.front().timestamp;
  s.last_timestamp = entries.back().timestamp;
  s.first_doc_id = entries.front().doc_id;
  s.last_doc_id = entries.back().doc_id;
  s.doc_count = static_cast<int>(entries.size());
  s.bbox_min = s.bbox_max = doc(entries.front().doc_id).s_pre.coords;
  std::map<std::uint64_t, int> sig_counts;
  for (const auto& e : entries) {
    const ExperienceTuple& d = doc(e.doc_id);
    if (d.diagnosis.outcome) ++s.success_count;
    if (d.diagnosis.failure_reason) ++s.reason_histogram[std::string(to_string(*d.diagnosis.failure_reason))];
    for (const auto& t : e.tags) ++s.tag_histogram[t];
    for (const auto& p : {d.s_pre.coords, d.s_post.coords}) {
      s.bbox_min = {std::min(s.bbox_min.x, p.x), std::min(s.bbox_min.y, p.y), std::min(s.bbox_min.z, p.z)};
      s.bbox_max = {std::max(s.bbox_max.x, p.x), std::max(s.bbox_max.y, p.y), std::max(s.bbox_max.z, p.z)};
    }
    for (const auto& [item, n] : d.diagnosis.state_diff.inventory) s.net_inv_delta[item] += n;
    ++sig_counts[e.cond_sig];
  }
  std::erase_if(s.net_inv_delta, [](const auto& kv) { return kv.second == 0; });
  s.success_rate = static_cast<double>(s.success_count) / s.doc_count;
  std::vector<std::pair<std::uint64_t, int>> sigs(sig_counts.begin(), sig_counts.end());
  std::stable_sort(sigs.begin(), sigs.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < sigs.size() && i < 5; ++i) s.top_cond_sigs.push_back(sigs[i].first);
  return s;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw StorageError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StorageError("rename failed for " + path.string() + ": " + ec.message());
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw StorageError("cannot open " + path.string());
  out << line << '\n';
  if (!out.flush()) throw StorageError("write failed: " + path.string());
}

std::vector<json> read_lines(const fs::path& path) {
  std::vector<json> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw StorageError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

struct ExperienceStore::Impl {
  StoreConfig cfg;
  std::optional<fs::path> dir;
  mutable std::shared_mutex mu;
  std::vector<ExperienceTuple> docs;
  std::vector<IndexEntry> index;
  std::unordered_map<std::string, std::size_t> by_id;
  std::vector<SummaryRecord> summaries;
  std::int64_t counter = 0;
  std::size_t live = 0;

  fs::path file(const char* name) const { return *dir / name; }

  void write_meta() const {
    if (!dir) return;
    json meta{{"config", cfg.to_json()},
              {"config_hash", hex64(fnv1a64(canonical(cfg.to_json())))},
              {"counter", counter},
              {"summary_count", summaries.size()}};
    write_atomic(file("meta.json"), canonical(meta) + "\n");
  }

  void rewrite_index() const {
    if (!dir) return;
    std::string out;
    for (const auto& e : index) out += canonical(json(e)) + "\n";
    write_atomic(file("index.jsonl"), out);
  }

  std::vector<SummaryRecord> rollup_locked(int w) {
    if (w < 2) throw ConfigError("rollup window must be >= 2");
    if (static_cast<int>(live) <= w) return {};
    const std::size_t batch = static_cast<std::size_t>(w / 2);
    std::vector<SummaryRecord> made;
    auto doc = [this](const std::string& id) -> const ExperienceTuple& { return docs[by_id.at(id)]; };
    std::size_t pos = 0;
    while (static_cast<int>(live) > w) {
      std::vector<std::size_t> picked;
      for (; pos < index.size() && picked.size() < batch; ++pos)
        if (!index[pos].rolled_up) picked.push_back(pos);
      std::vector<IndexEntry> group;
      for (auto i : picked) group.push_back(index[i]);
      char id[32];
      std::snprintf(id, sizeof id, "s_%06zu", summaries.size() + 1);
      summaries.push_back(summarize_impl(group, doc, id));
      made.push_back(summaries.back());
      for (auto i : picked) index[i].rolled_up = true;
      live -= picked.size();
    }
    if (dir) {
      for (const auto& s : made) append_line(file("summaries.jsonl"), canonical(json(s)));
      rewrite_index();
      write_meta();
    }
    return made;
  }
};

ExperienceStore::ExperienceStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ExperienceStore::~ExperienceStore() = default;

std::unique_ptr<ExperienceStore> ExperienceStore::in_memory(StoreConfig cfg) {
  auto impl = std::make_unique<Impl>();
  impl->cfg = cfg;
  return std::unique_ptr<ExperienceStore>(new ExperienceStore(std::move(impl)));
}

std::unique_ptr<ExperienceStore> ExperienceStore::open(const fs::path& dir, StoreConfig cfg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create store directory " + dir.string() + ": " + ec.message());
  auto impl = std::make_unique<Impl>();
  impl->cfg = cfg;
  impl->dir = dir;

  const fs::path meta_path = dir / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    json meta = json::parse(in);
    const std::string want = hex64(fnv1a64(canonical(cfg.to_json())));
    if (meta.at("config_hash").get<std::string>() != want)
      throw ConfigError("store at " + dir.string() + " was created with a different configuration " +
                        canonical(meta.at("config")));
    impl->counter = meta.at("counter").get<std::int64_t>();
  }
  for (const auto& j : read_lines(dir / "experience.jsonl")) impl->docs.push_back(j.get<ExperienceTuple>());
  for (const auto& j : read_lines(dir / "index.jsonl")) impl->index.push_back(j.get<IndexEntry>());
  for (const auto& j : read_lines(dir / "summaries.jsonl")) impl->summaries.push_back(j.get<SummaryRecord>());

  // A crash between the document and index writes leaves documents without
  // index entries; rebuild those from the documents.
  if (impl->index.size() > impl->docs.size()) throw StorageError("index.jsonl has entries without documents");
  for (std::size_t i = 0; i < impl->docs.size(); ++i) {
    impl->by_id[impl->docs[i].doc_id] = i;
    if (i >= impl->index.size()) {
      const auto ts = static_cast<std::int64_t>(i + 1);
      impl->index.push_back(build_index_entry(impl->docs[i], ts, cfg.cell_size));
      append_line(dir / "index.jsonl", canonical(json(impl->index.back())));
    }
  }
  impl->counter = std::max<std::int64_t>(impl->counter, static_cast<std::int64_t>(impl->docs.size()));
  for (const auto& e : impl->index)
    if (!e.rolled_up) ++impl->live;
  impl->write_meta();
  return std::unique_ptr<ExperienceStore>(new ExperienceStore(std::move(impl)));
}

std::string ExperienceStore::append(ExperienceTuple e) {
  std::unique_lock lock(impl_->mu);
  const std::int64_t n = impl_->counter + 1;
  e.doc_id = format_doc_id(n);
  e.diagnosis.check();
  check_invariants(e);
  IndexEntry entry = build_index_entry(e, n, impl_->cfg.cell_size);
  if (impl_->dir) {
    append_line(impl_->file("experience.jsonl"), canonical(json(e)));
    append_line(impl_->file("index.jsonl"), canonical(json(entry)));
  }
  impl_->counter = n;
  impl_->by_id[e.doc_id] = impl_->docs.size();
  impl_->docs.push_back(std::move(e));
  impl_->index.push_back(std::move(entry));
  ++impl_->live;
  if (impl_->cfg.auto_rollup && static_cast<int>(impl_->live) > impl_->cfg.rollup_window)
    impl_->rollup_locked(impl_->cfg.rollup_window);
  else
    impl_->write_meta();
  return impl_->docs.back().doc_id;
}

std::vector<IndexEntry> ExperienceStore::query(const QueryFilter& filter, std::size_t limit) const {
  if (!filter.any()) throw ContractViolation("query: at least one filter dimension must be set");
  if (limit == 0) throw ContractViolation("query: limit must be positive");
  std::shared_lock lock(impl_->mu);
  std::vector<IndexEntry> out;
  for (auto it = impl_->index.rbegin(); it != impl_->index.rend() && out.size() < limit; ++it)
    if (filter.matches(*it)) out.push_back(*it);
  return out;
}

std::vector<SummaryRecord> ExperienceStore::rollup(int w) {
  std::unique_lock lock(impl_->mu);
  return impl_->rollup_locked(w);
}

ExperienceTuple ExperienceStore::get_document(const std::string& doc_id) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->by_id.find(doc_id);
  if (it == impl_->by_id.end()) throw NotFound("no document " + doc_id);
  return impl_->docs[it->second];
}

std::optional<IndexEntry> ExperienceStore::get_entry(const std::string& doc_id) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->by_id.find(doc_id);
  if (it == impl_->by_id.end()) return std::nullopt;
  return impl_->index[it->second];
}

std::vector<IndexEntry> ExperienceStore::live_entries() const {
  std::shared_lock lock(impl_->mu);
  std::vector<IndexEntry> out;
  for (const auto& e : impl_->index)
    if (!e.rolled_up) out.push_back(e);
  return out;
}

std::vector<IndexEntry> ExperienceStore::all_entries() const {
  std::shared_lock lock(impl_->mu);
  return impl_->index;
}

std::vector<SummaryRecord> ExperienceStore::summaries() const {
  std::shared_lock lock(impl_->mu);
  return impl_->summaries;
}

std::vector<ExperienceTuple> ExperienceStore::documents() const {
  std::shared_lock lock(impl_->mu);
  return impl_->docs;
}

std::size_t ExperienceStore::size() const {
  std::shared_lock lock(impl_->mu);
  return impl_->docs.size();
}

std::size_t ExperienceStore::live_size() const {
  std::shared_lock lock(impl_->mu);
  return impl_->live;
}

std::string ExperienceStore::next_doc_id() const {
  std::shared_lock lock(impl_->mu);
  return format_doc_id(impl_->counter + 1);
}

const StoreConfig& ExperienceStore::config() const { return impl_->cfg; }

std::optional<fs::path> ExperienceStore::directory() const { return impl_->dir; }

}  // namespace evo
