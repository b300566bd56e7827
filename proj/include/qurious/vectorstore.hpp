#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qurious/embedding.hpp"

namespace qurious::vectorstore {

using embedding::EmbeddingMatrix;

struct SearchHit {
  std::string id;
  float score = 0.0f;
  std::size_t row = 0;  // row in the matrix the index was built from

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Hit ordering used everywhere: score descending, then id ascending.
bool hit_before(const SearchHit& a, const SearchHit& b) noexcept;

/// Exact top-k by inner product over unit-norm rows. Returns min(k, count)
/// hits. Throws DomainError on dim mismatch or k == 0.
std::vector<SearchHit> brute_force_topk(const EmbeddingMatrix& matrix, std::span<const float> query,
                                        std::size_t k);

class IvfIndex;

inline constexpr std::size_t kDefaultKmeansIters = 25;

/// Spherical k-means (k-means++ seeding, Lloyd updates with centroids
/// renormalized) until the largest centroid shift is below 1e-6 or
/// max_iters; rows are then assigned to their most similar centroid.
/// Deterministic given seed. Throws DomainError if ncells < 1 or
/// ncells > count.
IvfIndex ivf_build(const EmbeddingMatrix& matrix, std::size_t ncells, std::uint64_t seed,
                   std::size_t max_iters = kDefaultKmeansIters);

/// Probe the nprobe most similar centroids (ties to lower cell), score
/// every row in those lists exactly, return the global top-k.
/// Throws DomainError unless 1 <= nprobe <= ncells, k >= 1 and dims match.
std::vector<SearchHit> ivf_search(const IvfIndex& index, std::span<const float> query,
                                  std::size_t k, std::size_t nprobe);

IvfIndex decode_index(std::string_view bytes, const EmbeddingMatrix& matrix);

/// Inverted file over a k-means coarse quantizer. Every row lives in exactly
/// one list; lists keep a packed copy of their vectors so probing streams
/// contiguous memory, and candidates are re-scored with the full vectors.
class IvfIndex {
 public:
  std::size_t dim() const noexcept { return dim_; }
  std::size_t ncells() const noexcept { return ncells_; }
  std::size_t count() const noexcept { return ids_.size(); }
  std::uint64_t build_seed() const noexcept { return seed_; }
  std::size_t default_nprobe() const noexcept { return default_nprobe_; }

  std::span<const float> centroid(std::size_t c) const noexcept {
    return {centroids_.data() + c * dim_, dim_};
  }
  const std::vector<float>& centroids() const noexcept { return centroids_; }
  /// Matrix rows assigned to cell c, ascending.
  const std::vector<std::uint64_t>& list(std::size_t c) const noexcept { return lists_[c]; }
  const std::string& id(std::size_t row) const noexcept { return ids_[row]; }

  friend IvfIndex ivf_build(const EmbeddingMatrix&, std::size_t, std::uint64_t, std::size_t);
  friend IvfIndex decode_index(std::string_view, const EmbeddingMatrix&);

 private:
  void pack(const EmbeddingMatrix& matrix);

  std::size_t dim_ = 0;
  std::size_t ncells_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t default_nprobe_ = 1;
  std::vector<float> centroids_;                 // ncells x dim
  std::vector<std::vector<std::uint64_t>> lists_;  // row refs per cell
  std::vector<std::vector<float>> packed_;       // vectors per cell, list order
  std::vector<std::string> ids_;

  friend std::vector<SearchHit> ivf_search(const IvfIndex&, std::span<const float>, std::size_t,
                                           std::size_t);
};

/// round(sqrt(n)) clamped to [1, 65536].
std::size_t default_ncells(std::size_t n) noexcept;

/// round(sqrt(ncells)), at least 1. Derived from ncells so it survives a
/// save/load round trip without its own field.
std::size_t default_nprobe_for(std::size_t ncells) noexcept;

/// QIVF companion rows live in the QEMB file with the same stem.
std::filesystem::path qemb_path_for(const std::filesystem::path& qivf);

std::string encode_index(const IvfIndex& index);

void save_index(const IvfIndex& index, const std::filesystem::path& path);
/// Throws FormatError (magic/version/structure), LengthError (truncation or
/// trailing bytes), DomainError when the matrix does not match the index.
IvfIndex load_index(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

}  // namespace qurious::vectorstore
