#include "backcast/textio.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace backcast {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool is_comment_or_blank(std::string_view line, std::string_view comment_chars) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return comment_chars.find(c) != std::string_view::npos;
    }
    return true;
}

std::optional<double> parse_double(std::string_view token) {
    if (token.empty()) return std::nullopt;
    // from_chars does not accept a leading '+', but hand-written inputs use it
    if (token.front() == '+') token.remove_prefix(1);
    double value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::optional<std::int64_t> parse_int(std::string_view token) {
    if (token.empty()) return std::nullopt;
    if (token.front() == '+') token.remove_prefix(1);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::optional<std::uint64_t> parse_uint(std::string_view token) {
    if (token.empty()) return std::nullopt;
    if (token.front() == '+') token.remove_prefix(1);
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: value does not fit");
    return std::string(buf, ptr);
}

std::string format_fixed(double v, int digits) {
    char buf[512];
    int n = std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    if (n < 0 || n >= static_cast<int>(sizeof(buf)))
        throw std::runtime_error("format_fixed: value does not fit");
    return std::string(buf, static_cast<std::size_t>(n));
}

std::string format_sig(double v, int digits) {
    char buf[64];
    int n = std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    if (n < 0 || n >= static_cast<int>(sizeof(buf)))
        throw std::runtime_error("format_sig: value does not fit");
    return std::string(buf, static_cast<std::size_t>(n));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw std::runtime_error("read failed: " + path);
    return std::move(buf).str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace backcast
