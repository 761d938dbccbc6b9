#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hetnet {

/// Shortest decimal that parses back to exactly `x`.
std::string format_double(double x);

/// Inverse of format_double; throws std::invalid_argument on garbage.
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

std::string trim(std::string_view text);

}  // namespace hetnet
