#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace swapzon {

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

/// RFC-4180 field quoting.
std::string csv_field(std::string_view s);
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace swapzon
