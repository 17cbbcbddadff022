#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace backcast {

// Splits a line on runs of spaces and tabs. Never yields empty tokens.
std::vector<std::string_view> split_fields(std::string_view line);

// True for blank lines and lines whose first non-blank character is one of
// `comment_chars`.
bool is_comment_or_blank(std::string_view line, std::string_view comment_chars = "#;");

// Strict whole-token numeric parses; nullopt when the token is not a number
// or has trailing garbage.
std::optional<double> parse_double(std::string_view token);
std::optional<std::int64_t> parse_int(std::string_view token);
std::optional<std::uint64_t> parse_uint(std::string_view token);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

// Fixed-point rendering with exactly `digits` fractional digits.
std::string format_fixed(double v, int digits);

// Rendering with `digits` significant digits (printf %g style).
std::string format_sig(double v, int digits);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Calls fn(line_number, line) for every line of `text`; line numbers are
// 1-based and a trailing newline does not produce an extra empty line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::size_t end = (eol == std::string_view::npos) ? text.size() : eol;
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        fn(++line_no, line);
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
}

} // namespace backcast
