#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace l2rs {

// Shortest-exact decimal forms used by every text artifact. 17 significant
// digits reproduce an IEEE double bit-for-bit; 9 do the same for a float.
std::string format_double(double value, int significant_digits = 17);
std::string join_doubles(std::span<const double> values, char sep = ' ', int significant_digits = 17);

// Strict numeric parsing: the whole token must be consumed.
double parse_double(std::string_view token, const std::string& source, std::size_t line);
long long parse_int(std::string_view token, const std::string& source, std::size_t line);

std::vector<std::string_view> split_ws(std::string_view line);
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace l2rs
