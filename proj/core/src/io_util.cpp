#include "taib/io_util.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "taib/error.hpp"
#include "taib/random.hpp"

namespace taib::io {

std::string format_double(double value) {
    if (value == 0.0) return "0";  // folds -0 as well
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw Error("failed to format number");
    return std::string(buf.data(), end);
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_number) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (quoted) throw ParseError(line_number, "unterminated quoted field");
    fields.push_back(std::move(current));
    return fields;
}

std::string escape_csv(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::int64_t parse_duration(std::string_view text) {
    if (text.empty()) throw UsageError("empty duration");
    std::int64_t multiplier = 1;
    switch (text.back()) {
        case 's': multiplier = 1; break;
        case 'm': multiplier = 60; break;
        case 'h': multiplier = 3600; break;
        case 'd': multiplier = 86400; break;
        case 'w': multiplier = 7 * 86400; break;
        default: multiplier = 0; break;
    }
    std::string_view digits = multiplier == 0 ? text : text.substr(0, text.size() - 1);
    if (multiplier == 0) multiplier = 1;
    std::int64_t amount = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), amount);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
        throw UsageError("malformed duration '" + std::string(text) + "'");
    }
    if (amount <= 0) throw UsageError("duration must be positive: '" + std::string(text) + "'");
    return amount * multiplier;
}

std::string digest_hex(std::string_view bytes) {
    const std::uint64_t h = rng::fnv1a(bytes);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[15 - i] = hex[(h >> (4 * i)) & 0xf];
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace taib::io
