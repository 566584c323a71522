#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stap {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// "key=value" (surrounding blanks ignored); nullopt for blank or '#' lines.
std::optional<std::pair<std::string, std::string>> split_key_value(std::string_view line);

// "a=1,b=two" -> {{"a","1"},{"b","two"}}. A bare token maps to "".
std::vector<std::pair<std::string, std::string>> parse_option_list(std::string_view text);

// Strict numeric/boolean parsing; ConfigError names the offending key.
long long parse_int(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

// Shortest text that round-trips to the same double.
std::string format_double(double v);

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

void sleep_ms(double ms);

// stderr logger; STAP_LOG (e.g. "debug", "off") sets the level, default warn.
void init_logging();

}  // namespace stap
