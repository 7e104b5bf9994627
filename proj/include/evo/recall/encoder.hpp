#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "evo/model/types.hpp"

namespace evo {

inline constexpr int kEncoderDim = 256;
inline constexpr double kCellSize = 16.0;

// Lowercase alphanumeric tokens; every other character separates.
std::vector<std::string> tokenize(std::string_view text);

// Tokens with stop words removed and a trailing plural "s" stripped, sorted.
std::vector<std::string> content_tokens(std::string_view text);

// Signed-free feature hashing of tokens into `dim` buckets, L2-normalized
// when nonzero. Entries are nonnegative, so cosine lies in [0, 1].
std::vector<double> encode(std::string_view text, int dim = kEncoderDim);
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Unnormalized bucket counts of the same hashing, sorted by bucket.
using BucketCounts = std::vector<std::pair<std::uint32_t, std::int64_t>>;
BucketCounts encode_counts(std::string_view text, int dim = kEncoderDim);
// Cosine of the normalized vectors, computed from integer counts as
// dot / sqrt(|a|^2 |b|^2) so equal count patterns give bit-equal results.
double cosine_counts(const BucketCounts& a, const BucketCounts& b);

std::uint64_t condition_hash(TaskKind kind, std::string_view condition);
std::uint64_t condition_hash(const SubgoalSpec& sg);

std::array<std::int64_t, 3> cell_of(const Vec3& coords, double cell_size = kCellSize);
std::uint64_t spatial_hash(const Vec3& coords, double cell_size = kCellSize);
// Coarse quadrant label of the cell, e.g. "zone_nw".
std::string zone_label(const Vec3& coords, double cell_size = kCellSize);

}  // namespace evo
