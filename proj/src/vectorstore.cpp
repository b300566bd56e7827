#include "qurious/vectorstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "qurious/error.hpp"
#include "qurious/rng.hpp"
#include "qurious/simd/kernels.hpp"

namespace qurious::vectorstore {

bool hit_before(const SearchHit& a, const SearchHit& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

namespace {

// Bounded top-k over (score, row) with ids resolved lazily for tie-breaks.
class TopK {
 public:
  TopK(std::size_t k, const std::vector<std::string>& ids) : k_(k), ids_(ids) { heap_.reserve(k); }

  void push(float score, std::size_t row) {
    const Entry e{score, row};
    if (heap_.size() < k_) {
      heap_.push_back(e);
      std::push_heap(heap_.begin(), heap_.end(), better_);
    } else if (better_(e, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), better_);
      heap_.back() = e;
      std::push_heap(heap_.begin(), heap_.end(), better_);
    }
  }

  std::vector<SearchHit> take() {
    std::sort(heap_.begin(), heap_.end(), better_);
    std::vector<SearchHit> out;
    out.reserve(heap_.size());
    for (const Entry& e : heap_) out.push_back({ids_[e.row], e.score, e.row});
    heap_.clear();
    return out;
  }

 private:
  struct Entry {
    float score;
    std::size_t row;
  };
  struct Better {
    const std::vector<std::string>* ids;
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.score != b.score) return a.score > b.score;
      return (*ids)[a.row] < (*ids)[b.row];
    }
  };

  std::size_t k_;
  const std::vector<std::string>& ids_;
  Better better_{&ids_};
  std::vector<Entry> heap_;  // max-heap under Better: front is the worst kept
};

void check_query(std::size_t dim, std::span<const float> query) {
  if (query.size() != dim) {
    throw DomainError("query dim " + std::to_string(query.size()) + " != index dim " +
                      std::to_string(dim));
  }
}

constexpr std::size_t kScoreChunk = 1024;

// Index of the best score (ties to the lowest index).
std::size_t argmax(std::span<const float> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

void normalize(std::span<float> v) {
  double ss = 0.0;
  for (const float x : v) ss += static_cast<double>(x) * x;
  if (ss == 0.0) return;
  const double n = std::sqrt(ss);
  for (float& x : v) x = static_cast<float>(x / n);
}

}  // namespace

std::vector<SearchHit> brute_force_topk(const EmbeddingMatrix& matrix, std::span<const float> query,
                                        std::size_t k) {
  if (k == 0) throw DomainError("k must be >= 1");
  check_query(matrix.dim(), query);
  TopK top(std::min(k, matrix.count()), matrix.ids());
  std::vector<float> scores(kScoreChunk);
  const std::size_t dim = matrix.dim();
  for (std::size_t begin = 0; begin < matrix.count(); begin += kScoreChunk) {
    const std::size_t rows = std::min(kScoreChunk, matrix.count() - begin);
    simd::dot_rows(query.data(), matrix.data().data() + begin * dim, rows, dim, scores.data());
    for (std::size_t r = 0; r < rows; ++r) top.push(scores[r], begin + r);
  }
  return top.take();
}

std::size_t default_ncells(std::size_t n) noexcept {
  const auto c = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return std::clamp<std::size_t>(c, 1, 65536);
}

std::size_t default_nprobe_for(std::size_t ncells) noexcept {
  const auto p = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(ncells))));
  return std::clamp<std::size_t>(p, 1, std::max<std::size_t>(ncells, 1));
}

void IvfIndex::pack(const EmbeddingMatrix& matrix) {
  packed_.assign(ncells_, {});
  for (std::size_t c = 0; c < ncells_; ++c) {
    packed_[c].resize(lists_[c].size() * dim_);
    for (std::size_t i = 0; i < lists_[c].size(); ++i) {
      const auto src = matrix.row(lists_[c][i]);
      std::copy(src.begin(), src.end(), packed_[c].begin() + static_cast<std::ptrdiff_t>(i * dim_));
    }
  }
  ids_ = matrix.ids();
}

IvfIndex ivf_build(const EmbeddingMatrix& matrix, std::size_t ncells, std::uint64_t seed,
                   std::size_t max_iters) {
  const std::size_t n = matrix.count();
  const std::size_t dim = matrix.dim();
  if (ncells < 1) throw DomainError("ncells must be >= 1");
  if (ncells > n) {
    throw DomainError("ncells " + std::to_string(ncells) + " exceeds row count " + std::to_string(n));
  }
  const float* data = matrix.data().data();
  const auto& k = simd::kernels();
  SplitMix64 rng(seed);

  // k-means++ seeding.
  std::vector<float> centroids(ncells * dim);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < ncells; ++c) {
    std::copy_n(data + pick * dim, dim, centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    if (c + 1 == ncells) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], static_cast<double>(k.l2sqr(data + i * dim, centroids.data() + c * dim, dim)));
      total += nearest[i];
    }
    if (total <= 0.0) {
      pick = rng.below(n);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += nearest[i];
      if (acc > target && nearest[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }

  std::vector<std::uint32_t> assign(n, 0);
  std::vector<float> best_score(n, 0.0f);
  std::vector<float> scores(ncells);
  std::vector<std::size_t> sizes(ncells);

  const auto assign_all = [&] {
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      k.dot_rows(data + i * dim, centroids.data(), ncells, dim, scores.data());
      const std::size_t c = argmax(scores);
      assign[i] = static_cast<std::uint32_t>(c);
      best_score[i] = scores[c];
      ++sizes[c];
    }
  };

  // Moves the least similar rows (from cells with more than one member) to
  // seed any empty cells. Returns true if a cell was re-seeded.
  const auto reseed_empty = [&] {
    std::vector<std::size_t> order;
    bool changed = false;
    for (std::size_t c = 0; c < ncells; ++c) {
      if (sizes[c] != 0) continue;
      if (order.empty()) {
        order.resize(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return best_score[a] < best_score[b]; });
      }
      for (auto it = order.begin(); it != order.end(); ++it) {
        const std::size_t i = *it;
        if (sizes[assign[i]] <= 1) continue;
        --sizes[assign[i]];
        assign[i] = static_cast<std::uint32_t>(c);
        sizes[c] = 1;
        best_score[i] = 1.0f;
        std::copy_n(data + i * dim, dim, centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
        order.erase(it);
        changed = true;
        break;
      }
    }
    return changed;
  };

  std::vector<double> sums(ncells * dim);
  std::vector<float> updated(ncells * dim);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    assign_all();
    reseed_empty();
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* s = sums.data() + assign[i] * dim;
      const float* x = data + i * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < ncells; ++c) {
      std::span<float> out(updated.data() + c * dim, dim);
      const double* s = sums.data() + c * dim;
      double ss = 0.0;
      for (std::size_t j = 0; j < dim; ++j) ss += s[j] * s[j];
      if (ss == 0.0) {
        std::copy_n(centroids.begin() + static_cast<std::ptrdiff_t>(c * dim), dim, out.begin());
      } else {
        const double norm = std::sqrt(ss);
        for (std::size_t j = 0; j < dim; ++j) out[j] = static_cast<float>(s[j] / norm);
      }
      max_shift = std::max(max_shift,
                           std::sqrt(static_cast<double>(k.l2sqr(out.data(), centroids.data() + c * dim, dim))));
    }
    centroids.swap(updated);
    if (max_shift < 1e-6) break;
  }

  assign_all();
  for (std::size_t guard = 0; guard < ncells && reseed_empty(); ++guard) {
    for (std::size_t c = 0; c < ncells; ++c) normalize({centroids.data() + c * dim, dim});
    assign_all();
  }

  IvfIndex index;
  index.dim_ = dim;
  index.ncells_ = ncells;
  index.seed_ = seed;
  index.default_nprobe_ = default_nprobe_for(ncells);
  index.centroids_ = std::move(centroids);
  index.lists_.assign(ncells, {});
  for (std::size_t i = 0; i < n; ++i) index.lists_[assign[i]].push_back(i);
  index.pack(matrix);
  return index;
}

std::vector<SearchHit> ivf_search(const IvfIndex& index, std::span<const float> query,
                                  std::size_t k, std::size_t nprobe) {
  if (k == 0) throw DomainError("k must be >= 1");
  if (nprobe < 1 || nprobe > index.ncells_) {
    throw DomainError("nprobe " + std::to_string(nprobe) + " outside [1, " +
                      std::to_string(index.ncells_) + "]");
  }
  check_query(index.dim_, query);
  const auto& kern = simd::kernels();
  const std::size_t dim = index.dim_;

  std::vector<float> cscores(index.ncells_);
  kern.dot_rows(query.data(), index.centroids_.data(), index.ncells_, dim, cscores.data());
  std::vector<std::uint32_t> cells(index.ncells_);
  std::iota(cells.begin(), cells.end(), 0u);
  std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(nprobe), cells.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return cscores[a] != cscores[b] ? cscores[a] > cscores[b] : a < b;
                    });

  TopK top(std::min(k, index.count()), index.ids_);
  std::vector<float> scores;
  for (std::size_t p = 0; p < nprobe; ++p) {
    const std::size_t c = cells[p];
    const auto& rows = index.lists_[c];
    scores.resize(rows.size());
    kern.dot_rows(query.data(), index.packed_[c].data(), rows.size(), dim, scores.data());
    for (std::size_t i = 0; i < rows.size(); ++i) top.push(scores[i], rows[i]);
  }
  return top.take();
}

// --- QIVF --------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'Q', 'I', 'V', 'F'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 2 + 4 + 4 + 8 + 8;

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) throw LengthError(std::string("QIVF truncated in ") + what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_index(const IvfIndex& index) {
  std::string out;
  out.append(kMagic, 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.dim()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.ncells()));
  put_le<std::uint64_t>(out, index.count());
  put_le<std::uint64_t>(out, index.build_seed());
  for (const float x : index.centroids()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
  for (std::size_t c = 0; c < index.ncells(); ++c) {
    put_le<std::uint64_t>(out, index.list(c).size());
    for (const std::uint64_t r : index.list(c)) put_le<std::uint64_t>(out, r);
  }
  return out;
}

IvfIndex decode_index(std::string_view bytes, const EmbeddingMatrix& matrix) {
  if (bytes.size() < 4) throw LengthError("QIVF header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad QIVF magic");
  Reader in(bytes.substr(4));
  const auto version = in.get<std::uint16_t>("version");
  if (version != kVersion) throw FormatError("unsupported QIVF version " + std::to_string(version));
  const auto dim = in.get<std::uint32_t>("dim");
  const auto ncells = in.get<std::uint32_t>("ncells");
  const auto count = in.get<std::uint64_t>("count");
  const auto seed = in.get<std::uint64_t>("seed");
  if (dim == 0 || ncells == 0) throw FormatError("QIVF dim and ncells must be > 0");
  if (dim != matrix.dim() || count != matrix.count()) {
    throw DomainError("QIVF (" + std::to_string(count) + " x " + std::to_string(dim) +
                      ") does not match embeddings (" + std::to_string(matrix.count()) + " x " +
                      std::to_string(matrix.dim()) + ")");
  }
  if (in.remaining() / 4 / dim < ncells) throw LengthError("QIVF centroid block truncated");

  IvfIndex index;
  index.dim_ = dim;
  index.ncells_ = ncells;
  index.seed_ = seed;
  index.default_nprobe_ = default_nprobe_for(ncells);
  index.centroids_.resize(static_cast<std::size_t>(ncells) * dim);
  for (float& x : index.centroids_) {
    x = std::bit_cast<float>(in.get<std::uint32_t>("centroids"));
    if (!std::isfinite(x)) throw DataError("QIVF centroid is not finite");
  }
  std::vector<bool> seen(count, false);
  std::uint64_t total = 0;
  index.lists_.assign(ncells, {});
  for (std::size_t c = 0; c < ncells; ++c) {
    const auto len = in.get<std::uint64_t>("list length");
    if (len > in.remaining() / 8) {
      throw LengthError("QIVF list " + std::to_string(c) + " length " + std::to_string(len) +
                        " runs past end of file");
    }
    auto& list = index.lists_[c];
    list.reserve(len);
    for (std::uint64_t i = 0; i < len; ++i) {
      const auto row = in.get<std::uint64_t>("list");
      if (row >= count || seen[row]) {
        throw FormatError("QIVF row ref " + std::to_string(row) + " out of range or repeated");
      }
      seen[row] = true;
      list.push_back(row);
    }
    total += len;
  }
  if (in.remaining() != 0) throw LengthError("QIVF has trailing bytes");
  if (total != count) throw FormatError("QIVF lists cover " + std::to_string(total) + " of " +
                                        std::to_string(count) + " rows");
  index.pack(matrix);
  return index;
}

std::filesystem::path qemb_path_for(const std::filesystem::path& qivf) {
  std::filesystem::path p = qivf;
  p.replace_extension(".qemb");
  return p;
}

void save_index(const IvfIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  const std::string bytes = encode_index(index);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

IvfIndex load_index(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_index(ss.str(), matrix);
}

}  // namespace qurious::vectorstore
