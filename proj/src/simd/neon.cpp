#include <arm_neon.h>

#include "qurious/simd/kernels.hpp"

namespace qurious::simd {
namespace {

inline float dot_neon(const float* a, const float* b, std::size_t n) {
  float32x4_t acc0 = vdupq_n_f32(0.0f);
  float32x4_t acc1 = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
  }
  if (i + 4 <= n) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    i += 4;
  }
  float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float dot_entry(const float* a, const float* b, std::size_t n) { return dot_neon(a, b, n); }

float l2sqr_neon(const float* a, const float* b, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t d = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
    acc = vfmaq_f32(acc, d, d);
  }
  float out = vaddvq_f32(acc);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    out += d * d;
  }
  return out;
}

void dot_rows_neon(const float* query, const float* base, std::size_t rows, std::size_t dim,
                   float* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_neon(query, base + r * dim, dim);
}

}  // namespace

namespace detail {
const KernelTable kNeonTable{Isa::neon, dot_entry, l2sqr_neon, dot_rows_neon};
}

}  // namespace qurious::simd
