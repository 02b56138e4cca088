#pragma once

// Helpers shared between translation units; not part of the public API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace themescope::detail {

std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temp file and rename so readers never see partial output.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits one CSV record per RFC 4180. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no);
std::string csv_escape(std::string_view field);

/// printf "%.6g"; the fixed precision of every float written to a report.
std::string format_g6(double value);
/// The value after a round trip through format_g6; negative zero becomes 0.
double round_g6(double value);

}  // namespace themescope::detail
