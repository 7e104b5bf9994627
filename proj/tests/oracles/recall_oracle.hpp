#pragma once

// Full-scan reference for the recall score: its own tokenizer, hashing and
// sparse counting, then a plain sort over every summary and live entry.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evo/recall/recall.hpp"

namespace oracle {

inline std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out(1);
  for (char ch : text) {
    const bool alnum = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9');
    if (alnum) out.back() += static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch - 'A' + 'a' : ch);
    else if (!out.back().empty()) out.emplace_back();
  }
  if (out.back().empty()) out.pop_back();
  return out;
}

inline std::uint64_t cond_sig(const std::string& kind, const std::string& text) {
  static const std::set<std::string> stop = {"a",  "an",   "the", "to",  "of", "at",   "in",  "on",
                                             "by", "near", "and", "for", "up", "with", "from", "some"};
  std::vector<std::string> toks;
  for (auto w : words(text)) {
    if (stop.count(w)) continue;
    if (w.size() > 3 && w[w.size() - 1] == 's' && w[w.size() - 2] != 's') w.pop_back();
    toks.push_back(w);
  }
  std::sort(toks.begin(), toks.end());
  std::string key = kind + "|";
  for (const auto& t : toks) key += t + " ";
  return fnv(key);
}

inline double cos(const std::string& a, const std::string& b, int dim) {
  std::map<std::uint64_t, std::int64_t> ca, cb;
  for (const auto& w : words(a)) ++ca[fnv(w) % static_cast<std::uint64_t>(dim)];
  for (const auto& w : words(b)) ++cb[fnv(w) % static_cast<std::uint64_t>(dim)];
  std::int64_t dot = 0, na = 0, nb = 0;
  for (auto& [k, v] : ca) {
    na += v * v;
    if (cb.count(k)) dot += v * cb[k];
  }
  for (auto& [k, v] : cb) nb += v * v;
  if (na == 0 || nb == 0) return 0.0;
  return std::min(1.0, static_cast<double>(dot) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb)));
}

struct Ranked {
  std::string id;
  double psi;
  std::int64_t ts;
};

// Contexts used with this oracle always carry a pending subgoal.
inline std::vector<Ranked> full_scan(const evo::RecallContext& ctx, const evo::ExperienceStore& store,
                                     const evo::RecallConfig& cfg) {
  const std::string ctext = evo::render_context(ctx);
  const auto& p = ctx.pending.at(0);
  const std::uint64_t sig = cond_sig(std::string(evo::to_string(p.task_kind)), p.condition);
  std::vector<Ranked> all;
  for (const auto& s : store.summaries()) {
    const bool hit = std::count(s.top_cond_sigs.begin(), s.top_cond_sigs.end(), sig) > 0;
    all.push_back({s.summary_id, cfg.alpha * cos(ctext, evo::render_summary(s), cfg.dim) + cfg.beta * (hit ? 1.0 : 0.0),
                   s.last_timestamp});
  }
  for (const auto& e : store.live_entries())
    all.push_back({e.doc_id,
                   cfg.alpha * cos(ctext, evo::render_entry(e), cfg.dim) + cfg.beta * (e.cond_sig == sig ? 1.0 : 0.0),
                   e.timestamp});
  std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
    if (a.psi != b.psi) return a.psi > b.psi;
    if (a.ts != b.ts) return a.ts > b.ts;
    return a.id < b.id;
  });
  if (all.size() > static_cast<std::size_t>(cfg.k)) all.resize(static_cast<std::size_t>(cfg.k));
  return all;
}

}  // namespace oracle
