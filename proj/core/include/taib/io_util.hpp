#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace taib::io {

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes. Throws ParseError on an unterminated quote.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_number);

/// Quotes a field only when it contains a comma, quote, or line break.
std::string escape_csv(std::string_view field);

/// Parses "90d", "48h", "30m", "1800s", "2w" or a bare integer (seconds).
std::int64_t parse_duration(std::string_view text);

/// 64-bit FNV-1a digest rendered as 16 hex characters.
std::string digest_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace taib::io
