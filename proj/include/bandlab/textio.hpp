#pragma once

// Shared helpers for the plain-text file formats.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bandlab::textio {

// Shortest decimal form that still round-trips binary64 (17 significant digits).
std::string format_double(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);
std::uint64_t parse_u64(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace bandlab::textio
