#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mea::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s) noexcept;

/// Splits into lines, accepting LF or CRLF endings.
std::vector<std::string_view> lines(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Creates parent directories as needed; throws io_error on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace mea::io
