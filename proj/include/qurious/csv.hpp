#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qurious::csv {

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
/// Throws ParseError(line) on an unterminated quote.
std::vector<std::string> split(std::string_view line, std::size_t line_no = 0);

}  // namespace qurious::csv
