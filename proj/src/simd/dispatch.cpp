#include <cstdlib>
#include <string>

#include "qurious/error.hpp"
#include "qurious/simd/kernels.hpp"

namespace qurious::simd {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw DomainError("instruction set not available: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return detail::kAvx2Table;
#endif
#if defined(__aarch64__)
    case Isa::neon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

namespace {

const KernelTable& select() noexcept {
  if (const char* forced = std::getenv("QURIOUS_SIMD")) {
    const std::string_view name(forced);
    for (const Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (name == isa_name(isa) && isa_available(isa)) return kernels_for(isa);
    }
  }
  for (const Isa isa : {Isa::avx2, Isa::neon}) {
    if (isa_available(isa)) return kernels_for(isa);
  }
  return detail::kScalarTable;
}

}  // namespace

const KernelTable& kernels() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace qurious::simd
