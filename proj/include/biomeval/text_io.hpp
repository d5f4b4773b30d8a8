#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace biomeval {

std::string read_text_file(const std::filesystem::path& path);

/// Writes bytes verbatim (binary mode, so LF stays LF). Creates parent
/// directories as needed.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Strict parse of a whole field; throws Error{parse} with `context` on failure.
double parse_double(std::string_view text, std::string_view context);

/// Splits on ',' (no quoting: identifiers in every file format here are
/// comma-free).
std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

/// Lines of a text file, without terminators. A trailing CR is rejected so
/// that CRLF files fail loudly instead of producing ids with '\r' in them.
std::vector<std::string_view> split_lines(std::string_view text, std::string_view context);

}  // namespace biomeval
