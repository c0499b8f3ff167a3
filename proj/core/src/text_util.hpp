#pragma once

// Small text helpers shared by the parsers and writers. Not installed.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qgs::detail {

std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view s);
/// Drops everything from the first '#'.
std::string strip_comment(std::string_view s);

/// Strict full-string parse; throws std::invalid_argument naming the text.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);
/// Comma and/or whitespace separated numbers.
std::vector<double> parse_number_list(std::string_view s);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace qgs::detail
