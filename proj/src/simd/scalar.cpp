#include "qurious/simd/kernels.hpp"

namespace qurious::simd {
namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float l2sqr_scalar(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    const float d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void dot_rows_scalar(const float* query, const float* base, std::size_t rows, std::size_t dim,
                     float* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(query, base + r * dim, dim);
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{Isa::scalar, dot_scalar, l2sqr_scalar, dot_rows_scalar};
}

}  // namespace qurious::simd
