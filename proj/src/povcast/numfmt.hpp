#pragma once

#include <string>
#include <string_view>

namespace povcast {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Strict parse of a full string; throws FormatError on trailing junk.
double parse_double(std::string_view s);

} // namespace povcast
