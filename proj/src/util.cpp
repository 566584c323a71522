#include "stap/util.hpp"

#include <charconv>
#include <cstdlib>
#include <thread>

#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "stap/error.hpp"

namespace stap {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<std::pair<std::string, std::string>> split_key_value(std::string_view line) {
  const auto t = trim(line);
  if (t.empty() || t[0] == '#') return std::nullopt;
  const auto eq = t.find('=');
  if (eq == std::string::npos) return std::pair{t, std::string{}};
  return std::pair{trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1))};
}

std::vector<std::pair<std::string, std::string>> parse_option_list(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    if (auto kv = split_key_value(item)) out.push_back(std::move(*kv));
  }
  return out;
}

long long parse_int(std::string_view text, std::string_view what) {
  const auto t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(std::string(what) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view text, std::string_view what) {
  const auto t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(std::string(what) + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(std::string(what) + ": expected a boolean, got '" + std::string(text) + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

void sleep_ms(double ms) {
  if (ms <= 0.0) return;
  std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

void init_logging() {
  // Logs go to stderr so that stdout stays machine-readable.
  auto logger = spdlog::get("stap");
  if (!logger) logger = spdlog::stderr_color_mt("stap");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("STAP_LOG")) spdlog::cfg::helpers::load_levels(level);
}

}  // namespace stap
