#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nnal::text {

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

/// Fixed 17 significant digits.
std::string format_precise(double value);

std::vector<std::string_view> split(std::string_view line, char delimiter);

std::string_view trim(std::string_view s);

/// Whole-field parse; nullopt on any trailing garbage or an empty field.
std::optional<double> parse_double(std::string_view field);
std::optional<long> parse_long(std::string_view field);

}  // namespace nnal::text
