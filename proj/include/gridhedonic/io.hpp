#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gridhedonic::io {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Splits one CSV line on commas. Fields are never quoted in the formats this
// project reads and writes.
std::vector<std::string> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view text);

// Shortest round-trip decimal representation.
std::string format_double(double value);
// Fixed number of decimals.
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace gridhedonic::io
