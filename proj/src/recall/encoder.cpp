#include "evo/recall/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "evo/error.hpp"
#include "evo/model/json_io.hpp"

namespace evo {

namespace {

const std::set<std::string, std::less<>> kStopTokens = {"a",  "an",   "the", "to",  "of", "at",   "in",  "on",
                                                        "by", "near", "and", "for", "up", "with", "from", "some"};

std::string stem(std::string tok) {
  if (tok.size() > 3 && tok.back() == 's' && tok[tok.size() - 2] != 's') tok.pop_back();
  return tok;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> content_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text))
    if (!kStopTokens.contains(t)) out.push_back(stem(std::move(t)));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> encode(std::string_view text, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  for (const auto& t : tokenize(text)) v[fnv1a64(t) % static_cast<std::uint64_t>(dim)] += 1.0;
  double n = 0;
  for (double x : v) n += x * x;
  if (n > 0) {
    n = std::sqrt(n);
    for (double& x : v) x /= n;
  }
  return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractViolation("cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

BucketCounts encode_counts(std::string_view text, int dim) {
  std::map<std::uint32_t, std::int64_t> m;
  for (const auto& t : tokenize(text)) ++m[static_cast<std::uint32_t>(fnv1a64(t) % static_cast<std::uint64_t>(dim))];
  return {m.begin(), m.end()};
}

double cosine_counts(const BucketCounts& a, const BucketCounts& b) {
  std::int64_t dot = 0, na = 0, nb = 0;
  for (const auto& [k, v] : a) na += v * v;
  for (const auto& [k, v] : b) nb += v * v;
  if (na == 0 || nb == 0) return 0.0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) ++i;
    else if (j->first < i->first) ++j;
    else dot += (i++)->second * (j++)->second;
  }
  return std::min(1.0, static_cast<double>(dot) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb)));
}

std::uint64_t condition_hash(TaskKind kind, std::string_view condition) {
  std::string key(to_string(kind));
  key += '|';
  for (const auto& t : content_tokens(condition)) {
    key += t;
    key += ' ';
  }
  return fnv1a64(key);
}

std::uint64_t condition_hash(const SubgoalSpec& sg) { return condition_hash(sg.task_kind, sg.condition); }

std::array<std::int64_t, 3> cell_of(const Vec3& coords, double cell_size) {
  if (!coords.finite()) throw ContractViolation("spatial_hash: non-finite coordinates");
  return {static_cast<std::int64_t>(std::floor(coords.x / cell_size)),
          static_cast<std::int64_t>(std::floor(coords.y / cell_size)),
          static_cast<std::int64_t>(std::floor(coords.z / cell_size))};
}

std::uint64_t spatial_hash(const Vec3& coords, double cell_size) {
  auto c = cell_of(coords, cell_size);
  return fnv1a64(std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]));
}

std::string zone_label(const Vec3& coords, double cell_size) {
  auto c = cell_of(coords, cell_size);
  return std::string("zone_") + (c[2] < 1 ? "n" : "s") + (c[0] < 1 ? "w" : "e");
}

}  // namespace evo
