#pragma once

// Text helpers shared by the line-oriented file formats.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace eegcs {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_ws(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Fixed-point with `decimals` digits, rounding half away from zero on the
/// shortest decimal representation (98.115 -> "98.12").
std::string format_fixed(double v, int decimals);

// Throw ParseError(line) on malformed input; line 0 omits the prefix.
std::int64_t parse_int(std::string_view s, size_t line = 0);
double parse_double(std::string_view s, size_t line = 0);

}  // namespace eegcs
