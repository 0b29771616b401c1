#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace drfn {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, int& out);
bool parse_unsigned(std::string_view s, unsigned& out);

/// Shortest representation that parses back to the identical double.
std::string format_double(double v);

}  // namespace drfn
