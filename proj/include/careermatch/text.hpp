#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace careermatch {

/// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

/// Lowercases ASCII letters and splits on runs of non-alphanumeric ASCII.
/// Bytes >= 0x80 count as word characters so UTF-8 words (umlauts etc.)
/// stay intact.
std::vector<std::string> tokenize(std::string_view text);

/// Whitespace-delimited word count.
std::size_t count_words(std::string_view text);

/// FNV-1a 64-bit, continuing from `state`.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffset);

/// Shortest decimal that parses back to exactly `value`.
std::string format_double(double value);

/// Appends `[v0,v1,...]` using format_double.
void append_vector(std::string& out, std::span<const double> values);

/// JSON string literal (with quotes) for `s`.
std::string json_quote(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// Calls `fn(line, line_number)` for each line; strips a trailing '\r'.
template <typename Fn>
void for_each_line(std::string_view data, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, ++line_no);
    pos = end + 1;
  }
}

}  // namespace careermatch
