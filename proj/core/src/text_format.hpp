#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace poleplan::detail {

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// Strict full-string parse; returns false on any trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_size(std::string_view s, std::size_t& out);

// RFC 4180 style field split of a single line (quotes, doubled quotes).
bool split_csv_line(std::string_view line, std::vector<std::string>& fields);
std::string csv_escape(std::string_view field);

std::string_view trim(std::string_view s);

}  // namespace poleplan::detail
