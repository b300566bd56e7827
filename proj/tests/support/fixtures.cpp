#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include <unistd.h>

#include "qurious/rng.hpp"

namespace fixtures {

using qurious::embedding::EmbeddingMatrix;

qurious::analytics::CountGrid table3() {
  // how, what, when, where, which, who, why, if, other
  return {{
      {121, 100, 16, 18, 0, 26, 191, 30, 136},     // Business & Finance
      {34, 9, 3, 2, 0, 3, 18, 5, 34},              // Computers & Internet
      {132, 81, 8, 11, 2, 50, 84, 16, 68},         // Education & Reference
      {55, 56, 10, 10, 0, 12, 80, 39, 108},        // Entertainment & Music
      {44, 32, 8, 8, 0, 1, 95, 14, 68},            // Family & Relationships
      {159, 66, 18, 10, 0, 6, 299, 34, 84},        // Health
      {23, 18, 7, 2, 0, 5, 57, 22, 51},            // Politics & Government
      {1355, 646, 88, 99, 15, 58, 1107, 392, 918}, // Science & Mathematics
      {142, 159, 23, 21, 0, 52, 286, 108, 237},    // Society & Culture
      {47, 14, 5, 0, 0, 15, 48, 7, 59},            // Sports
  }};
}

std::vector<qurious::corpus::Question> table3_questions() {
  using namespace qurious::corpus;
  std::vector<Question> out;
  const auto grid = table3();
  for (std::size_t t = 0; t < kTopicCount; ++t) {
    for (std::size_t y = 0; y < kTypeCount; ++y) {
      for (std::uint64_t i = 0; i < grid[t][y]; ++i) {
        Question q;
        q.id = "t" + std::to_string(out.size());
        q.qtype = static_cast<QType>(y);
        q.topic = static_cast<Topic>(t);
        out.push_back(std::move(q));
      }
    }
  }
  return out;
}

namespace {

std::vector<float> gaussian_row(qurious::SplitMix64& rng, std::size_t dim) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.gaussian());
  return v;
}

void normalize(std::vector<float>& v) {
  double s = 0.0;
  for (const float x : v) s += static_cast<double>(x) * x;
  const double inv = 1.0 / std::sqrt(s);
  for (auto& x : v) x = static_cast<float>(x * inv);
}

}  // namespace

EmbeddingMatrix random_unit(std::size_t n, std::size_t dim, std::uint64_t seed) {
  qurious::SplitMix64 rng(seed);
  EmbeddingMatrix m(dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = gaussian_row(rng, dim);
    normalize(v);
    m.append("r" + std::to_string(i), v);
  }
  return m;
}

EmbeddingMatrix clustered_unit(std::size_t n, std::size_t dim, std::size_t clusters, double spread,
                               std::uint64_t seed) {
  qurious::SplitMix64 rng(seed);
  std::vector<std::vector<float>> centres;
  for (std::size_t c = 0; c < clusters; ++c) {
    auto v = gaussian_row(rng, dim);
    normalize(v);
    centres.push_back(std::move(v));
  }
  EmbeddingMatrix m(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centres[rng.below(clusters)];
    std::vector<float> v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = c[d] + static_cast<float>(spread * rng.gaussian());
    normalize(v);
    m.append("r" + std::to_string(i), v);
  }
  return m;
}

EmbeddingMatrix random_queries(std::size_t n, std::size_t dim, std::uint64_t seed) {
  return random_unit(n, dim, seed ^ 0x5eed5eed5eedULL);
}

qurious::equivalence::Graph two_cliques_with_bridge() {
  qurious::equivalence::Graph g(8);
  for (std::size_t base : {0u, 4u}) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) g.add_edge(base + i, base + j);
    }
  }
  g.add_edge(3, 4);
  return g;
}

std::filesystem::path data_path(const std::filesystem::path& name) {
  return std::filesystem::path(QURIOUS_DATA_DIR) / name;
}

std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("qurious-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
