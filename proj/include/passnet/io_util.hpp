#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace passnet::io {

std::vector<std::string> split(std::string_view line, char delimiter);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Lines without trailing '\r'; a final empty line is dropped.
std::vector<std::string> lines(std::string_view text);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace passnet::io
