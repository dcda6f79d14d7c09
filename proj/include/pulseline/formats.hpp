#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pulseline {

/// Shortest decimal text that parses back to the same double; "inf",
/// "-inf" and "nan" for non-finite values.
std::string format_double(double v);

double parse_double(std::string_view text);
long parse_long(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Non-empty lines of a text file with trailing CR stripped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace pulseline
