#ifndef FAIRENS_IO_HPP
#define FAIRENS_IO_HPP

#include "fairens/core.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace fairens::io {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Splits on `delim`; a delimiter of ' ' splits on runs of blanks/tabs.
inline std::vector<std::string> split(std::string_view line, char delim)
{
    std::vector<std::string> out;
    if (delim == ' ') {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
                ++i;
            }
            const auto start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
                ++i;
            }
            if (i > start) {
                out.emplace_back(line.substr(start, i - start));
            }
        }
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::optional<long long> parse_int(std::string_view s)
{
    s = trim(s);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

/// Shortest text that parses back to the identical double.
inline std::string format_double(double x)
{
    return fmt::format("{}", x);
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

/// 64-bit FNV-1a over the file contents, as 16 hex digits.
inline std::string file_checksum(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return fmt::format("{:016x}", h);
}

using KeyValues = std::map<std::string, std::string>;

/// `key=value` per line; blank lines and `#` comments are skipped.
inline KeyValues parse_key_values(const std::vector<std::string>& lines, const std::string& origin)
{
    KeyValues kv;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(origin + ":" + std::to_string(i + 1) + ": expected key=value");
        }
        kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
    }
    return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path)
{
    return parse_key_values(read_lines(path), path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << text;
}

inline void write_key_values(const std::filesystem::path& path, const KeyValues& kv)
{
    std::string text;
    for (const auto& [k, v] : kv) {
        text += k + "=" + v + "\n";
    }
    write_text(path, text);
}

}  // namespace fairens::io

#endif  // FAIRENS_IO_HPP
