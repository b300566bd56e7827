#include "qurious/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qurious/error.hpp"
#include "qurious/rng.hpp"
#include "qurious/text.hpp"

namespace qurious::embedding {

using nlohmann::json;

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DomainError("embedding dim must be > 0");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<std::string> ids,
                                 std::vector<float> data)
    : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
  if (dim == 0) throw DomainError("embedding dim must be > 0");
  if (data_.size() != ids_.size() * dim_) {
    throw DomainError("embedding data size " + std::to_string(data_.size()) + " != " +
                      std::to_string(ids_.size()) + " x " + std::to_string(dim_));
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw DomainError("duplicate embedding id " + ids_[i]);
  }
}

std::optional<std::size_t> EmbeddingMatrix::find(const std::string& id) const {
  if (const auto it = index_.find(id); it != index_.end()) return it->second;
  return std::nullopt;
}

void EmbeddingMatrix::append(std::string id, std::span<const float> values) {
  if (values.size() != dim_) {
    throw DomainError("row dim " + std::to_string(values.size()) + " != " + std::to_string(dim_));
  }
  if (!index_.emplace(id, ids_.size()).second) throw DomainError("duplicate embedding id " + id);
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

void EmbeddingMatrix::l2_normalize() {
  for (std::size_t r = 0; r < count(); ++r) {
    auto v = row(r);
    double ss = 0.0;
    for (const float x : v) ss += static_cast<double>(x) * x;
    if (!std::isfinite(ss)) throw DataError("non-finite embedding row " + ids_[r]);
    if (ss == 0.0) throw DataError("zero embedding row " + ids_[r]);
    const double norm = std::sqrt(ss);
    for (float& x : v) x = static_cast<float>(x / norm);
  }
}

// --- QEMB --------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'Q', 'E', 'M', 'B'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 2 + 4 + 8;

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return static_cast<T>(v);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace

std::string encode_qemb(const EmbeddingMatrix& m) {
  std::string out;
  out.reserve(kHeaderSize + m.data().size() * 4);
  out.append(kMagic, 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  put_le<std::uint64_t>(out, m.count());
  for (const float x : m.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
  return out;
}

EmbeddingMatrix decode_qemb(std::string_view bytes, std::vector<std::string> ids) {
  if (bytes.size() < kHeaderSize) throw LengthError("QEMB header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad QEMB magic");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kVersion) throw FormatError("unsupported QEMB version " + std::to_string(version));
  const auto dim = get_le<std::uint32_t>(bytes, 6);
  const auto count = get_le<std::uint64_t>(bytes, 10);
  if (dim == 0) throw FormatError("QEMB dim is zero");
  const std::uint64_t payload = bytes.size() - kHeaderSize;
  if (count > payload / 4 / dim || payload != count * dim * 4) {
    throw LengthError("QEMB payload is " + std::to_string(payload) + " bytes, header declares " +
                      std::to_string(count) + " x " + std::to_string(dim) + " floats");
  }
  std::vector<float> data(count * dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, kHeaderSize + 4 * i));
    if (!std::isfinite(data[i])) {
      throw DataError("non-finite value at row " + std::to_string(i / dim));
    }
  }
  if (ids.empty()) {
    ids.reserve(count);
    for (std::uint64_t r = 0; r < count; ++r) ids.push_back(std::to_string(r));
  } else if (ids.size() != count) {
    throw LengthError("ids file has " + std::to_string(ids.size()) + " rows, QEMB has " +
                      std::to_string(count));
  }
  return EmbeddingMatrix(dim, std::move(ids), std::move(data));
}

std::filesystem::path ids_path_for(const std::filesystem::path& qemb) {
  std::filesystem::path p = qemb;
  p.replace_extension(".ids.jsonl");
  return p;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    const std::string bytes = encode_qemb(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::ofstream ids(ids_path_for(path), std::ios::trunc);
  if (!ids) throw Error("cannot write " + ids_path_for(path).string());
  for (std::size_t r = 0; r < m.count(); ++r) {
    ids << json{{"row", r}, {"id", m.id(r)}}.dump() << '\n';
  }
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::vector<std::string> ids;
  if (const auto idp = ids_path_for(path); std::filesystem::exists(idp)) {
    std::ifstream in(idp);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
        const auto row = rec.at("row").get<std::size_t>();
        if (row != ids.size()) throw ParseError(line_no, "ids file rows out of order");
        ids.push_back(rec.at("id").get<std::string>());
      } catch (const json::exception& e) {
        throw ParseError(line_no, std::string("bad ids record: ") + e.what());
      }
    }
  }
  return decode_qemb(bytes, std::move(ids));
}

// --- similarity ----------------------------------------------------------------

double cosine_sim(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw DomainError("cosine_sim dim mismatch: " + std::to_string(u.size()) + " vs " +
                      std::to_string(v.size()));
  }
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += static_cast<double>(u[i]) * v[i];
    uu += static_cast<double>(u[i]) * u[i];
    vv += static_cast<double>(v[i]) * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw DomainError("cosine_sim of a zero vector");
  const double c = uv / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

// --- mock provider ----------------------------------------------------------------

std::vector<float> mock_vector(const std::string& text, std::size_t dim, std::uint64_t seed) {
  SplitMix64 rng(seed ^ text::fnv1a64(text::casefold(text)));
  std::vector<double> g(dim);
  double ss = 0.0;
  for (double& x : g) {
    x = rng.gaussian();
    ss += x * x;
  }
  const double norm = std::sqrt(ss);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(g[i] / norm);
  return out;
}

EmbeddingMatrix mock_embed(const std::vector<std::string>& ids, const std::vector<std::string>& texts,
                           std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw DomainError("mock embedding dim must be >= 2");
  if (ids.size() != texts.size()) throw DomainError("mock_embed: ids and texts differ in length");
  EmbeddingMatrix m(dim);
  for (std::size_t i = 0; i < texts.size(); ++i) m.append(ids[i], mock_vector(texts[i], dim, seed));
  return m;
}

EmbeddingMatrix mock_embed(const std::vector<std::string>& texts, std::size_t dim,
                           std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) ids.push_back(std::to_string(i));
  return mock_embed(ids, texts, dim, seed);
}

// --- providers --------------------------------------------------------------------

void EmbedderConfig::validate() const {
  if (dim == 0) throw DomainError("dim must be > 0");
  if (batch_size == 0) throw DomainError("batch_size must be > 0");
  if ((provider == Provider::http) != endpoint.has_value()) {
    throw DomainError(provider == Provider::http ? "http provider requires an endpoint"
                                                 : "endpoint is only valid for the http provider");
  }
  if (provider == Provider::file && !source) throw DomainError("file provider requires a source");
}

namespace {

class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(const EmbedderConfig& c) : dim_(c.dim), seed_(c.seed) {}
  EmbeddingMatrix embed(const std::vector<std::string>& ids,
                        const std::vector<std::string>& texts) override {
    return mock_embed(ids, texts, dim_, seed_);
  }
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

class FileEmbedder final : public Embedder {
 public:
  explicit FileEmbedder(const EmbedderConfig& c) : source_(load_embeddings(*c.source)) {
    if (source_.dim() != c.dim) {
      throw ContractError("embedding file dim " + std::to_string(source_.dim()) +
                          " != configured dim " + std::to_string(c.dim));
    }
  }
  EmbeddingMatrix embed(const std::vector<std::string>& ids,
                        const std::vector<std::string>& texts) override {
    if (ids.size() != texts.size()) throw DomainError("embed: ids and texts differ in length");
    EmbeddingMatrix m(source_.dim());
    for (const std::string& id : ids) {
      const auto r = source_.find(id);
      if (!r) throw DomainError("id not present in embedding file: " + id);
      m.append(id, source_.row(*r));
    }
    m.l2_normalize();
    return m;
  }
  std::size_t dim() const override { return source_.dim(); }

 private:
  EmbeddingMatrix source_;
};

class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(EmbedderConfig c) : config_(std::move(c)) {}
  EmbeddingMatrix embed(const std::vector<std::string>& ids,
                        const std::vector<std::string>& texts) override {
    return remote_embed(config_, ids, texts);
  }
  std::size_t dim() const override { return config_.dim; }

 private:
  EmbedderConfig config_;
};

}  // namespace

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  config.validate();
  switch (config.provider) {
    case Provider::mock: return std::make_unique<MockEmbedder>(config);
    case Provider::file: return std::make_unique<FileEmbedder>(config);
    case Provider::http: return std::make_unique<HttpEmbedder>(config);
  }
  throw DomainError("unknown provider");
}

}  // namespace qurious::embedding
