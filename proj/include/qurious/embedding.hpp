#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace qurious::embedding {

inline constexpr std::size_t kDefaultDim = 768;

/// count x dim row-major float32 vectors, one id per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim);
  /// Throws DomainError if data.size() != ids.size() * dim or ids repeat.
  EmbeddingMatrix(std::size_t dim, std::vector<std::string> ids, std::vector<float> data);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }

  const std::vector<float>& data() const noexcept { return data_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t i) const noexcept { return ids_[i]; }

  /// Row index for `id`, if present.
  std::optional<std::size_t> find(const std::string& id) const;

  /// Throws DomainError on a duplicate id or a wrong-sized row.
  void append(std::string id, std::span<const float> values);

  /// Scales every row to unit L2 norm. Throws DataError on a zero or
  /// non-finite row.
  void l2_normalize();

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.data_ == b.data_;
  }

 private:
  std::size_t dim_ = kDefaultDim;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Companion ids file for a QEMB path: "x.qemb" -> "x.ids.jsonl".
std::filesystem::path ids_path_for(const std::filesystem::path& qemb);

/// Writes the QEMB binary and its ids companion.
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);

/// Reads a QEMB file. Ids come from the companion file when it exists,
/// otherwise rows are named by their decimal index.
/// Throws FormatError (magic/version/dim), LengthError (truncated or
/// trailing bytes), DataError (NaN/Inf).
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// In-memory QEMB encoding, exposed for the file format tests.
std::string encode_qemb(const EmbeddingMatrix& m);
EmbeddingMatrix decode_qemb(std::string_view bytes, std::vector<std::string> ids = {});

/// cos(u, v). Throws DomainError on dim mismatch or a zero vector.
double cosine_sim(std::span<const float> u, std::span<const float> v);

/// Deterministic unit vector for `text`: SplitMix64 seeded by
/// seed ^ fnv1a64(casefold(text)), dim Gaussian draws, normalized.
std::vector<float> mock_vector(const std::string& text, std::size_t dim, std::uint64_t seed);

/// Rows named by `ids`; texts[i] -> row i. Throws DomainError if dim < 2 or
/// ids/texts lengths differ.
EmbeddingMatrix mock_embed(const std::vector<std::string>& ids, const std::vector<std::string>& texts,
                           std::size_t dim, std::uint64_t seed);
/// Convenience overload naming rows "0", "1", ...
EmbeddingMatrix mock_embed(const std::vector<std::string>& texts, std::size_t dim,
                           std::uint64_t seed);

enum class Provider { file, http, mock };

struct EmbedderConfig {
  Provider provider = Provider::mock;
  std::optional<std::string> endpoint;
  std::size_t dim = kDefaultDim;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;
  /// file provider: QEMB file holding precomputed rows keyed by id.
  std::optional<std::filesystem::path> source;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds backoff{100};
  int max_attempts = 3;

  /// Throws DomainError unless endpoint is set iff provider is http,
  /// batch_size > 0 and dim > 0.
  void validate() const;
};

/// Embedding provider behind a common interface. Every provider returns
/// unit-norm rows named by `ids`, in input order.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingMatrix embed(const std::vector<std::string>& ids,
                                const std::vector<std::string>& texts) = 0;
  virtual std::size_t dim() const = 0;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

/// POST /embed in batches of config.batch_size. Throws TransportError on a
/// non-200 status (body attached) or after max_attempts timeouts/connection
/// failures with exponential backoff; ContractError when the response dim or
/// row count is wrong.
EmbeddingMatrix remote_embed(const EmbedderConfig& config, const std::vector<std::string>& ids,
                             const std::vector<std::string>& texts);

struct HealthInfo {
  std::string status;
  std::size_t dim = 0;
  std::optional<std::string> pooling;
};

/// GET /health.
HealthInfo remote_health(const EmbedderConfig& config);

}  // namespace qurious::embedding
