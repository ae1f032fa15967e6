#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vesseledge::csv {

// RFC 4180 field splitting for a single physical line. Quoted fields may contain
// commas and doubled quotes; embedded newlines are not supported.
std::vector<std::string> split_line(std::string_view line, char sep = ',');

std::string quote_if_needed(std::string_view field, char sep = ',');

// Shortest round-trippable decimal form of a double.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::string_view trim(std::string_view s);

} // namespace vesseledge::csv
