#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Shortest round-trip decimal formatting for doubles plus a small CSV
// splitter. Re-ingesting any file written through format_double reproduces
// the in-memory values bit for bit.

namespace iontherm {

std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::vector<std::string_view> split_csv_row(std::string_view line);

}  // namespace iontherm
