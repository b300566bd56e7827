#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qurious::text {

/// True when `s` is well-formed UTF-8 (no overlongs, no surrogates).
bool valid_utf8(std::string_view s);

/// ASCII case fold. Non-ASCII bytes pass through untouched.
std::string casefold(std::string_view s);

/// Trim Unicode whitespace at both ends and collapse inner runs to a single
/// ASCII space.
std::string collapse_whitespace(std::string_view s);

/// Split on Unicode whitespace, strip leading/trailing punctuation from each
/// piece and case-fold it. Pieces that are pure punctuation are dropped.
std::vector<std::string> tokenize(std::string_view s);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace qurious::text
