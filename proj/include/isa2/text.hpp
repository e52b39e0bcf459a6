#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isa2 {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Fixed-point text with `digits` decimals.
std::string format_fixed(double value, int digits);

/// Parses the whole of `text` as a double; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);

std::optional<unsigned long long> parse_u64(std::string_view text);

/// Splits one CSV line on commas. No quoting support; none of our files need it.
std::vector<std::string_view> split_csv(std::string_view line);

std::string_view trim(std::string_view text);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace isa2
