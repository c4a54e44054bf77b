#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace afresnet::csv {

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(std::string_view line);

// Quotes the field when it contains a comma, quote or leading/trailing space.
std::string quote(std::string_view field);

// printf("%.6g")
std::string format_float(double v);

}  // namespace afresnet::csv
