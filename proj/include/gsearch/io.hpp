#pragma once
#include <string>
#include <string_view>
#include <vector>

namespace gsearch {

// Shortest decimal form that round-trips the exact double.
std::string format_double(double x);

// Strict parse; throws std::invalid_argument on malformed input.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string_view> split_fields(std::string_view line, char sep);

}  // namespace gsearch
