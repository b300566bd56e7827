#pragma once

// Float inner loops used by every similarity path (brute force, IVF probing,
// k-means, pair generation). Each instruction set provides the same table;
// the scalar table is the reference the others are tested against.

#include <cstddef>
#include <string_view>

namespace qurious::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  float (*dot)(const float* a, const float* b, std::size_t n);
  /// sum_i (a[i] - b[i])^2
  float (*l2sqr)(const float* a, const float* b, std::size_t n);
  /// out[r] = dot(query, base + r * dim, dim) for r in [0, rows). Each
  /// row is reduced exactly as `dot` reduces it, so scores are
  /// bit-identical whichever entry point computed them.
  void (*dot_rows)(const float* query, const float* base, std::size_t rows, std::size_t dim,
                   float* out);
};

/// Whether the running CPU (and this build) supports `isa`.
bool isa_available(Isa isa) noexcept;

/// Table for a specific instruction set. Throws DomainError if unavailable.
const KernelTable& kernels_for(Isa isa);

/// Table chosen once per process: the best available ISA, unless the
/// QURIOUS_SIMD environment variable names another (scalar|avx2|neon).
const KernelTable& kernels() noexcept;

inline float dot(const float* a, const float* b, std::size_t n) { return kernels().dot(a, b, n); }

inline float l2sqr(const float* a, const float* b, std::size_t n) {
  return kernels().l2sqr(a, b, n);
}

inline void dot_rows(const float* query, const float* base, std::size_t rows, std::size_t dim,
                     float* out) {
  kernels().dot_rows(query, base, rows, dim, out);
}

namespace detail {
extern const KernelTable kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable kAvx2Table;
#endif
#if defined(__aarch64__)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace qurious::simd
