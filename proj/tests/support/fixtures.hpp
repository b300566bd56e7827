#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "qurious/analytics.hpp"
#include "qurious/corpus.hpp"
#include "qurious/embedding.hpp"
#include "qurious/equivalence.hpp"

namespace fixtures {

/// Question counts per topic (rows) and type (columns) for the 8,600
/// Yahoo! Answers questions.
qurious::analytics::CountGrid table3();

/// One Question per counted cell entry, with topic and type already set.
std::vector<qurious::corpus::Question> table3_questions();

/// Gaussian rows, normalized.
qurious::embedding::EmbeddingMatrix random_unit(std::size_t n, std::size_t dim, std::uint64_t seed);

/// Rows drawn around `clusters` random unit centres with per-coordinate
/// noise `spread`, normalized.
qurious::embedding::EmbeddingMatrix clustered_unit(std::size_t n, std::size_t dim, std::size_t clusters,
                                                   double spread, std::uint64_t seed);

/// Unit query vectors (as rows of a matrix).
qurious::embedding::EmbeddingMatrix random_queries(std::size_t n, std::size_t dim, std::uint64_t seed);

/// Two 4-cliques {0..3} and {4..7} joined by the edge 3-4.
qurious::equivalence::Graph two_cliques_with_bridge();

std::filesystem::path data_path(const std::filesystem::path& name);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace fixtures
